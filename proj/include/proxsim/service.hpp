#pragma once

#include "proxsim/campaign.hpp"
#include "proxsim/registry.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

namespace proxsim {

/// Status plus JSON body. Error bodies are {"code", "message", "details"?}
/// with `code` one of: bad_request, not_found, unknown_simulator,
/// invalid_config, invalid_request, campaign_busy, campaign_stopped,
/// no_model_yet, out_of_domain, bad_sweep, simulator_failure, internal_error.
struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

ApiResponse api_error(int status, const std::string& code, const std::string& message,
                      const nlohmann::json& details = nullptr);

/// Transport-free implementation of the /api/v1 endpoints. Campaign journals
/// live in `data_dir` as <campaign_id>.jsonl and are reloaded on
/// construction. Thread-safe: reads run concurrently (against a published
/// snapshot of each campaign), and at most one advance runs per campaign.
class ApiService {
 public:
  ApiService(SimulatorRegistry registry, std::string data_dir);
  ~ApiService();

  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  SimulatorRegistry& registry() noexcept { return registry_; }
  const std::string& data_dir() const noexcept { return data_dir_; }

  ApiResponse list_simulators() const;
  ApiResponse get_simulator(const std::string& id) const;
  ApiResponse create_campaign(const nlohmann::json& body);
  ApiResponse list_campaigns() const;
  ApiResponse get_campaign(const std::string& id) const;
  ApiResponse advance(const std::string& id, const nlohmann::json& body);
  ApiResponse predict(const std::string& id, const nlohmann::json& body) const;
  ApiResponse sweep(const std::string& id, const nlohmann::json& body) const;

  /// Routes `method` + `path` (e.g. "POST", "/api/v1/campaigns/x/advance")
  /// with a raw request body.
  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::string& body);

  struct Entry;  // per-campaign state, defined in service.cpp

 private:
  std::shared_ptr<Entry> find(const std::string& id) const;
  void load_existing();

  SimulatorRegistry registry_;
  std::string data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> campaigns_;
};

/// Expands a sweep request into raw points. `grid` receives the varied
/// values. Throws Errc::invalid_config with variable() naming the problem
/// field for malformed requests; point validation errors pass through.
std::vector<RawPoint> expand_sweep(const Domain& domain, const nlohmann::json& request,
                                   nlohmann::json& grid);

/// Small HTTP front end over ApiService (cpp-httplib underneath).
class HttpServer {
 public:
  explicit HttpServer(ApiService& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port; port 0 picks a free port. Returns the bound port, or
  /// -1 on failure.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port" (port defaults to 8080; a bare ":port" binds 0.0.0.0).
std::pair<std::string, int> parse_bind(const std::string& bind);

}  // namespace proxsim
