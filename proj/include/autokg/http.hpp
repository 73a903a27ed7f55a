#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>

namespace autokg {

struct HttpReply {
    int status = 0; // 0 when the connection itself failed
    std::string body;
    std::string error;
};

using HttpHeaders = std::map<std::string, std::string>;
using HttpParams = std::map<std::string, std::string>;

// Seam between the live backends and the network so retry and error mapping
// can be exercised without sockets.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpReply post_json(const std::string& url, const HttpHeaders& headers, const std::string& body) = 0;
    virtual HttpReply get(const std::string& url, const HttpHeaders& headers, const HttpParams& params) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout = std::chrono::seconds(60));

} // namespace autokg
