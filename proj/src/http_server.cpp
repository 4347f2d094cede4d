#include "proxsim/service.hpp"

#include <httplib.h>

namespace proxsim {

struct HttpServer::Impl {
  ApiService& service;
  httplib::Server server;

  explicit Impl(ApiService& s) : service(s) {
    auto dispatch = [this](const std::string& method) {
      return [this, method](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse r = service.handle(method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
      };
    };
    server.Get(".*", dispatch("GET"));
    server.Post(".*", dispatch("POST"));
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });
    // The dashboard may be served from another origin during development.
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  }
};

HttpServer::HttpServer(ApiService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace proxsim
