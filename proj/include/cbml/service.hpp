#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "cbml/workspace.hpp"

namespace cbml {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  double default_delta = 0.05;
  std::size_t default_samples = 500;
  std::uint64_t default_seed = 7;
  int default_tree_depth = 3;
  std::size_t default_min_leaf = 10;
  std::size_t dse_cap = 10000;
};

// Stateless request handling over an immutable bundle. Transport-free so it
// can be exercised directly; serve() binds it to HTTP.
class DesignService {
 public:
  DesignService(std::shared_ptr<const ModelBundle> bundle, ServiceOptions options = {});

  ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

  ServiceResponse model_info() const;
  ServiceResponse schema() const;
  ServiceResponse predict(const nlohmann::json& body) const;
  ServiceResponse sensitivity(const nlohmann::json& body) const;
  ServiceResponse tree(const nlohmann::json& body) const;
  ServiceResponse dse(const nlohmann::json& body) const;

  const std::string& model_version() const { return version_; }

 private:
  std::shared_ptr<const ModelBundle> bundle_;
  ServiceOptions options_;
  std::string version_;
};

// JSON schemas of every request body, as published at /schema.
nlohmann::json request_schemas();

// HTTP/1.1 binding with permissive CORS.
class HttpServer {
 public:
  explicit HttpServer(const DesignService& service);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// bind + run. Host "0.0.0.0" listens on all interfaces.
void serve(const DesignService& service, const std::string& host, int port);

}  // namespace cbml
