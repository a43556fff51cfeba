#include "httplib.h"
#include "selftrack/service.hpp"

namespace selftrack {

bool serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  auto adapt = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest request{req.method, req.path, {}, req.body};
    for (const auto& [key, value] : req.params) request.query.emplace(key, value);
    const auto response = service.handle(request);
    res.status = response.status;
    res.set_content(response.body, response.content_type);
  };
  server.Get(".*", adapt);
  server.Post(".*", adapt);
  server.Put(".*", adapt);
  server.Delete(".*", adapt);
  return server.listen(host, port);
}

}  // namespace selftrack
