#include <iostream>

#include <httplib.h>

#include "r2dt/service.hpp"

namespace r2dt {

int serve_http(Service& service, const std::string& host, int port) {
    httplib::Server server;
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query[k] = v;
        const ApiResponse r = service.handle(req.method, req.path, query, req.body,
                                             req.get_header_value("Authorization"));
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Put(".*", forward);
    server.Delete(".*", forward);
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        std::cerr << req.method << ' ' << req.path << ' ' << res.status << '\n';
    });
    std::cerr << "r2dt: listening on " << host << ':' << port << '\n';
    if (!server.listen(host, port)) {
        std::cerr << "r2dt: cannot bind " << host << ':' << port << '\n';
        return 1;
    }
    return 0;
}

}  // namespace r2dt
