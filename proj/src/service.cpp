#include "cbml/service.hpp"

#include <cmath>
#include <cstdio>

#include <httplib.h>

namespace cbml {

using nlohmann::json;

namespace {

struct RequestError {
  int status;
  std::string message;
  std::string field;
};

std::string fnv_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json error_body(const std::string& message, const std::string& field = {}) {
  json j = {{"error", message}};
  if (!field.empty()) j["field"] = field;
  return j;
}

DesignConfig parse_config(const json& j, const std::string& prefix) {
  if (!j.is_object()) throw RequestError{400, "design config must be an object", prefix.empty() ? "config" : prefix};
  DesignConfig c;
  for (const auto& f : config_fields()) {
    const std::string key(f.name);
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = j.find(key);
    if (it == j.end()) {
      if (key == "heating_setpoint" || key == "cooling_setpoint") continue;
      throw RequestError{400, "missing field '" + path + "'", path};
    }
    if (!it->is_number()) throw RequestError{400, "field '" + path + "' must be a number", path};
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw RequestError{400, "field '" + path + "' must be finite", path};
    if (f.integer && v != std::floor(v)) throw RequestError{400, "field '" + path + "' must be an integer", path};
    set_field(c, key, v);
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!find_config_field(it.key())) {
      const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
      throw RequestError{400, "unknown field '" + path + "'", path};
    }
  }
  try {
    check_config(c);
  } catch (const ValidationError& e) {
    throw RequestError{400, e.what(), prefix.empty() ? "config" : prefix};
  }
  return c;
}

DesignRequest parse_design(const json& body, bool allow_flat) {
  if (!body.is_object()) throw RequestError{400, "request body must be a JSON object", ""};
  DesignRequest r;
  if (body.contains("config")) {
    r.config = parse_config(body["config"], "config");
  } else if (allow_flat) {
    r.config = parse_config(body, "");
  } else {
    throw RequestError{400, "missing field 'config'", "config"};
  }
  if (body.contains("shape")) {
    try {
      r.shape = shape_from_json(body["shape"]);
    } catch (const ValidationError& e) {
      throw RequestError{400, e.what(), "shape"};
    } catch (const json::exception& e) {
      throw RequestError{400, std::string("invalid shape: ") + e.what(), "shape"};
    }
  }
  return r;
}

template <typename T>
T optional_number(const json& body, const char* key, T fallback) {
  auto it = body.find(key);
  if (it == body.end()) return fallback;
  if (!it->is_number()) throw RequestError{400, std::string("field '") + key + "' must be a number", key};
  if constexpr (std::is_integral_v<T>) {
    const double v = it->get<double>();
    if (v < 0 || v != std::floor(v)) {
      throw RequestError{400, std::string("field '") + key + "' must be a non-negative integer", key};
    }
    return static_cast<T>(v);
  } else {
    return it->get<T>();
  }
}

json warnings_json(const std::vector<Violation>& v) {
  json out = json::array();
  for (const auto& w : v) {
    out.push_back({{"field", w.field}, {"value", w.value}, {"min", w.min}, {"max", w.max}, {"message", w.message}});
  }
  return out;
}

PerturbationPlan parse_plan(const json& body, const ServiceOptions& o) {
  const DesignRequest d = parse_design(body, false);
  PerturbationPlan p;
  p.base = d.config;
  p.shape = d.shape;
  p.delta = optional_number(body, "delta", o.default_delta);
  p.samples = optional_number<std::size_t>(body, "samples", o.default_samples);
  p.seed = optional_number<std::uint64_t>(body, "seed", o.default_seed);
  if (body.contains("variables")) {
    if (!body["variables"].is_array()) throw RequestError{400, "field 'variables' must be an array", "variables"};
    p.variables.clear();
    for (const auto& v : body["variables"]) {
      if (!v.is_string()) throw RequestError{400, "field 'variables' must hold strings", "variables"};
      p.variables.push_back(v.get<std::string>());
    }
  }
  try {
    p.validate();
  } catch (const ValidationError& e) {
    throw RequestError{400, e.what(), ""};
  }
  return p;
}

}  // namespace

json request_schemas() {
  json props = json::object();
  json required = json::array();
  const auto space = ParameterSpace::standard();
  for (const auto& f : config_fields()) {
    json p = {{"type", f.integer ? "integer" : "number"}, {"unit", std::string(f.unit)}};
    if (space.contains(f.name)) {
      const auto& r = space[space.index_of(f.name)];
      p["x-range"] = {r.min, r.max};
    }
    props[std::string(f.name)] = p;
    if (f.name != "heating_setpoint" && f.name != "cooling_setpoint") required.push_back(std::string(f.name));
  }
  const json config = {{"type", "object"}, {"properties", props}, {"required", required}, {"additionalProperties", false}};
  const json shape = {{"type", "object"},
                      {"properties",
                       {{"kind", {{"enum", {"box", "setback", "custom"}}}},
                        {"setback_fraction", {{"type", "number"}}},
                        {"footprint", {{"type", "object"}}}}}};
  const json analysis = {{"delta", {{"type", "number"}, {"minimum", 0}, {"maximum", 0.2}}},
                         {"samples", {{"type", "integer"}, {"minimum", 1}}},
                         {"seed", {{"type", "integer"}, {"minimum", 0}}},
                         {"variables", {{"type", "array"}, {"items", {{"type", "string"}}}}}};
  json sens_props = analysis;
  sens_props["config"] = config;
  sens_props["shape"] = shape;
  json tree_props = sens_props;
  tree_props["target"] = {{"type", "string"}, {"default", "building.eui"}};
  tree_props["max_depth"] = {{"type", "integer"}, {"minimum", 0}};
  tree_props["min_leaf"] = {{"type", "integer"}, {"minimum", 1}};
  tree_props["leaf_features"] = {{"type", "array"}, {"items", {{"type", "string"}}}};
  return {
      {"predict",
       {{"oneOf",
         {config,
          {{"type", "object"},
           {"properties", {{"config", config}, {"shape", shape}}},
           {"required", {"config"}}}}}}},
      {"sensitivity", {{"type", "object"}, {"properties", sens_props}, {"required", {"config"}}}},
      {"tree", {{"type", "object"}, {"properties", tree_props}, {"required", {"config"}}}},
      {"dse",
       {{"type", "object"},
        {"properties",
         {{"config", config},
          {"shape", shape},
          {"variants",
           {{"type", "array"},
            {"maxItems", 10000},
            {"items", {{"type", "object"}, {"additionalProperties", {{"type", "number"}}}}}}}}},
        {"required", {"config", "variants"}}}},
  };
}

DesignService::DesignService(std::shared_ptr<const ModelBundle> bundle, ServiceOptions options)
    : bundle_(std::move(bundle)), options_(options) {
  if (!bundle_) throw ValidationError("service needs a model bundle");
  bundle_->check_complete();
  version_ = fnv_hex(bundle_->provenance.dump());
}

ServiceResponse DesignService::model_info() const {
  json comps = json::array();
  for (auto k : kComponentKinds) {
    json c = cbml::schema(k).to_json();
    c["kind"] = std::string(to_string(k));
    if (const auto* m = dynamic_cast<const MlpModel*>(&bundle_->model(k))) {
      c["validation_r2"] = m->report().validation_r2;
      if (!m->report().grid.empty()) {
        c["hidden"] = m->report().best().hidden;
        c["l2"] = m->report().best().l2;
      }
    }
    comps.push_back(c);
  }
  return {200, {{"model_version", version_}, {"provenance", bundle_->provenance}, {"components", comps}}};
}

ServiceResponse DesignService::schema() const { return {200, request_schemas()}; }

ServiceResponse DesignService::predict(const json& body) const {
  const DesignRequest d = parse_design(body, true);
  const PredictOutput out = predict_request(*bundle_, d);
  json j = out.to_json();
  j["model_version"] = version_;
  return {out.warnings.empty() ? 200 : 422, j};
}

ServiceResponse DesignService::sensitivity(const json& body) const {
  const PerturbationPlan p = parse_plan(body, options_);
  json j = sensitivity_analysis(*bundle_, p).to_json();
  j["model_version"] = version_;
  return {200, j};
}

ServiceResponse DesignService::tree(const json& body) const {
  const PerturbationPlan p = parse_plan(body, options_);
  std::string target = "building.eui";
  if (body.contains("target")) {
    if (!body["target"].is_string()) throw RequestError{400, "field 'target' must be a string", "target"};
    target = body["target"].get<std::string>();
  }
  CartOptions o;
  o.max_depth = optional_number<int>(body, "max_depth", options_.default_tree_depth);
  o.min_leaf = optional_number<std::size_t>(body, "min_leaf", options_.default_min_leaf);
  TreeRun r;
  try {
    r = tree_analysis(*bundle_, p, target, o);
  } catch (const ValidationError& e) {
    throw RequestError{400, e.what(), "target"};
  }
  json j = r.to_json();
  if (body.contains("leaf_features")) {
    std::vector<std::string> feats;
    for (const auto& f : body["leaf_features"]) {
      if (!f.is_string()) throw RequestError{400, "field 'leaf_features' must hold strings", "leaf_features"};
      feats.push_back(f.get<std::string>());
    }
    json leaves = json::array();
    for (int leaf : r.tree.leaves()) {
      try {
        leaves.push_back(leaf_linear_model(r.tree, leaf, r.data, feats).to_json());
      } catch (const ValidationError& e) {
        leaves.push_back({{"leaf", leaf}, {"error", e.what()}});
      }
    }
    j["leaf_models"] = leaves;
  }
  j["target"] = target;
  j["model_version"] = version_;
  return {200, j};
}

ServiceResponse DesignService::dse(const json& body) const {
  const DesignRequest base = parse_design(body, false);
  if (!body.contains("variants") || !body["variants"].is_array()) {
    throw RequestError{400, "missing array field 'variants'", "variants"};
  }
  const json& variants = body["variants"];
  if (variants.size() > options_.dse_cap) {
    throw RequestError{400, "variants exceed the cap of " + std::to_string(options_.dse_cap), "variants"};
  }
  std::vector<DesignRequest> requests;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const json& v = variants[i];
    const std::string path = "variants[" + std::to_string(i) + "]";
    if (!v.is_object()) throw RequestError{400, path + " must be an object", path};
    DesignRequest r = base;
    for (auto it = v.begin(); it != v.end(); ++it) {
      const ConfigField* f = find_config_field(it.key());
      if (!f) throw RequestError{400, "unknown field '" + path + "." + it.key() + "'", path + "." + it.key()};
      if (!it->is_number()) throw RequestError{400, path + "." + it.key() + " must be a number", path + "." + it.key()};
      set_field(r.config, it.key(), it->get<double>());
    }
    requests.push_back(std::move(r));
  }
  std::vector<json> results(requests.size());
  parallel_for(requests.size(), [&](std::size_t i) {
    try {
      check_config(requests[i].config);
      const PredictOutput out = predict_request(*bundle_, requests[i]);
      results[i] = {{"eui", out.evaluation.output}, {"annual_energy", out.annual_energy},
                    {"warnings", warnings_json(out.warnings)}};
    } catch (const Error& e) {
      results[i] = {{"eui", nullptr}, {"error", e.what()}};
    }
  });
  return {200, {{"count", results.size()}, {"results", results}, {"eui_unit", units::kEui}, {"model_version", version_}}};
}

ServiceResponse DesignService::handle(const std::string& method, const std::string& path,
                                      const std::string& body) const {
  try {
    if (method == "GET" && path == "/model/info") return model_info();
    if (method == "GET" && path == "/schema") return schema();
    const bool known = path == "/predict" || path == "/sensitivity" || path == "/tree" || path == "/dse";
    if (!known && path != "/model/info" && path != "/schema") return {404, error_body("no route " + path)};
    if (method != "POST" || !known) return {405, error_body("method " + method + " not allowed on " + path)};
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      return {400, error_body(std::string("malformed JSON: ") + e.what())};
    }
    if (path == "/predict") return predict(j);
    if (path == "/sensitivity") return sensitivity(j);
    if (path == "/tree") return tree(j);
    return dse(j);
  } catch (const RequestError& e) {
    return {e.status, error_body(e.message, e.field)};
  } catch (const EvaluationError& e) {
    return {500, error_body(e.what())};
  } catch (const ValidationError& e) {
    return {400, error_body(e.what())};
  } catch (const std::exception& e) {
    return {500, error_body(e.what())};
  }
}

struct HttpServer::Impl {
  const DesignService& service;
  httplib::Server server;
  explicit Impl(const DesignService& s) : service(s) {}
};

HttpServer::HttpServer(const DesignService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    const ServiceResponse r = impl_->service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  for (const char* p : {"/model/info", "/schema"}) srv.Get(p, dispatch);
  for (const char* p : {"/predict", "/sensitivity", "/tree", "/dse"}) srv.Post(p, dispatch);
  srv.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

void serve(const DesignService& service, const std::string& host, int port) {
  HttpServer server(service);
  server.bind(host, port);
  server.run();
}

}  // namespace cbml
