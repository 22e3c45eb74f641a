#include "tisim/spec_io.hpp"

#include <set>

namespace tisim {

using nlohmann::json;

namespace {

// Reader that tracks the JSON path for error messages.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& msg) const { throw SimError(path_ + ": " + msg); }

  void expect_object(std::initializer_list<std::string_view> allowed) const {
    if (!node_.is_object()) fail("expected an object");
    for (const auto& [key, value] : node_.items()) {
      bool known = false;
      for (auto a : allowed) known |= key == a;
      if (!known) fail("unknown field '" + key + "'");
    }
  }

  bool has(std::string_view key) const { return node_.contains(std::string(key)); }

  Reader at(std::string_view key) const {
    const std::string k(key);
    if (!node_.contains(k)) fail("missing field '" + k + "'");
    return Reader(node_.at(k), path_ + "." + k);
  }

  Reader at(std::size_t i) const { return Reader(node_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!node_.is_array()) fail("expected an array");
    return node_.size();
  }

  double number() const {
    if (!node_.is_number()) fail("expected a number");
    return node_.get<double>();
  }

  std::string string() const {
    if (!node_.is_string()) fail("expected a string");
    return node_.get<std::string>();
  }

  bool boolean() const {
    if (!node_.is_boolean()) fail("expected a boolean");
    return node_.get<bool>();
  }

  std::size_t index() const {
    if (!node_.is_number_unsigned()) fail("expected a nonnegative integer");
    return node_.get<std::size_t>();
  }

  const json& raw() const { return node_; }
  const std::string& path() const { return path_; }

 private:
  const json& node_;
  std::string path_;
};

SpacetimePoint read_point(const Reader& r) { return {r.at("t").number(), r.at("x").number()}; }

Trigger read_trigger(const Reader& r) {
  r.expect_object({"kind", "id", "label", "t"});
  Trigger t;
  try {
    t.kind = parse_trigger_kind(r.at("kind").string());
  } catch (const SimError& e) {
    r.fail(e.what());
  }
  if (r.has("id")) t.absorber = r.at("id").string();
  if (r.has("label")) t.label = r.at("label").string();
  if (r.has("t")) t.t = r.at("t").number();
  return t;
}

Action read_action(const Reader& r) {
  r.expect_object({"kind", "id", "channel", "t", "x"});
  Action a;
  try {
    a.kind = parse_action_kind(r.at("kind").string());
  } catch (const SimError& e) {
    r.fail(e.what());
  }
  if (r.has("id")) a.absorber = r.at("id").string();
  if (r.has("channel")) a.channel = r.at("channel").string();
  a.at = read_point(r);
  return a;
}

}  // namespace

ExperimentSpec parse_spec(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw SimError("parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }

  const Reader root(doc, "$");
  root.expect_object({"name", "emission", "state", "absorbers", "rules", "coin", "screen"});
  ExperimentSpec spec;
  spec.name = root.at("name").string();

  const Reader emission = root.at("emission");
  emission.expect_object({"t", "x"});
  spec.emission = read_point(emission);

  const Reader state = root.at("state");
  std::vector<ChannelLabel> labels;
  std::vector<Amplitude> amps;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Reader e = state.at(i);
    e.expect_object({"channel", "re", "im"});
    labels.push_back(e.at("channel").string());
    amps.emplace_back(e.at("re").number(), e.has("im") ? e.at("im").number() : 0.0);
  }
  try {
    spec.initial_state = normalize(StateVector(std::move(labels), std::move(amps)));
  } catch (const SimError& e) {
    state.fail(e.what());
  }

  const Reader absorbers = root.at("absorbers");
  for (std::size_t i = 0; i < absorbers.size(); ++i) {
    const Reader a = absorbers.at(i);
    a.expect_object({"id", "channel", "t", "x", "present"});
    AbsorberConfig cfg;
    cfg.id = a.at("id").string();
    cfg.channel = a.at("channel").string();
    cfg.position = read_point(a);
    cfg.initially_present = a.has("present") ? a.at("present").boolean() : true;
    spec.absorbers.push_back(std::move(cfg));
  }

  if (root.has("rules")) {
    const Reader rules = root.at("rules");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const Reader r = rules.at(i);
      r.expect_object({"trigger", "action", "time"});
      ContingencyRule rule;
      rule.trigger = read_trigger(r.at("trigger"));
      rule.action = read_action(r.at("action"));
      rule.time = r.at("time").number();
      spec.rules.push_back(std::move(rule));
    }
  }

  if (root.has("coin")) {
    const Reader c = root.at("coin");
    c.expect_object({"labels", "weights", "flip_time", "on"});
    CoinConfig coin;
    const Reader labels_r = c.at("labels");
    const Reader weights_r = c.at("weights");
    if (labels_r.size() != 2) labels_r.fail("expected two labels");
    if (weights_r.size() != 2) weights_r.fail("expected two weights");
    for (std::size_t i = 0; i < 2; ++i) {
      coin.labels[i] = labels_r.at(i).string();
      coin.weights[i] = weights_r.at(i).number();
    }
    coin.flip_time = c.at("flip_time").number();
    if (c.has("on")) {
      const Reader on = c.at("on");
      if (!on.raw().is_object()) on.fail("expected an object");
      for (const auto& [label, value] : on.raw().items()) coin.on[label] = Reader(value, on.path() + "." + label).index();
    }
    spec.coin = coin;
  }

  if (root.has("screen")) {
    const Reader s = root.at("screen");
    s.expect_object({"d", "lambda", "L", "bins", "span"});
    ScreenModel m;
    m.slit_separation = s.at("d").number();
    m.wavelength = s.at("lambda").number();
    m.screen_distance = s.at("L").number();
    m.bins = s.at("bins").index();
    m.span = s.at("span").number();
    spec.screen = m;
  }
  return spec;
}

ExperimentSpec load_spec(std::string_view document) {
  ExperimentSpec spec = parse_spec(document);
  const auto errors = validate_spec(spec);
  if (!errors.empty()) {
    std::string msg = "invalid experiment '" + spec.name + "':";
    for (const auto& e : errors) msg += "\n  " + e;
    throw SimError(msg);
  }
  return spec;
}

json spec_to_json(const ExperimentSpec& spec) {
  json doc;
  doc["name"] = spec.name;
  doc["emission"] = {{"t", spec.emission.t}, {"x", spec.emission.x}};
  doc["state"] = json::array();
  const auto& basis = spec.initial_state.basis();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Amplitude a = spec.initial_state.amplitudes()[i];
    doc["state"].push_back({{"channel", basis[i]}, {"re", a.real()}, {"im", a.imag()}});
  }
  doc["absorbers"] = json::array();
  for (const auto& a : spec.absorbers) {
    doc["absorbers"].push_back(
        {{"id", a.id}, {"channel", a.channel}, {"t", a.position.t}, {"x", a.position.x}, {"present", a.initially_present}});
  }
  doc["rules"] = json::array();
  for (const auto& r : spec.rules) {
    json trigger{{"kind", to_string(r.trigger.kind)}};
    if (!r.trigger.absorber.empty()) trigger["id"] = r.trigger.absorber;
    if (!r.trigger.label.empty()) trigger["label"] = r.trigger.label;
    if (r.trigger.t) trigger["t"] = *r.trigger.t;
    json action{{"kind", to_string(r.action.kind)}, {"t", r.action.at.t}, {"x", r.action.at.x}};
    if (!r.action.absorber.empty()) action["id"] = r.action.absorber;
    if (!r.action.channel.empty()) action["channel"] = r.action.channel;
    doc["rules"].push_back({{"trigger", trigger}, {"action", action}, {"time", r.time}});
  }
  if (spec.coin) {
    json on = json::object();
    for (const auto& [label, idx] : spec.coin->on) on[label] = idx;
    doc["coin"] = {{"labels", spec.coin->labels},
                   {"weights", spec.coin->weights},
                   {"flip_time", spec.coin->flip_time},
                   {"on", on}};
  }
  if (spec.screen) {
    const auto& m = *spec.screen;
    doc["screen"] = {{"d", m.slit_separation},
                     {"lambda", m.wavelength},
                     {"L", m.screen_distance},
                     {"bins", m.bins},
                     {"span", m.span}};
  }
  return doc;
}

std::string dump_spec(const ExperimentSpec& spec) { return spec_to_json(spec).dump(2) + "\n"; }

}  // namespace tisim
