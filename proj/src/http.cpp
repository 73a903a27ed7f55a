#include "autokg/http.hpp"

#include "autokg/error.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <fmt/format.h>

namespace autokg {

namespace {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::InvalidConfig, fmt::format("URL '{}' has no scheme", url));
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

    HttpReply post_json(const std::string& url, const HttpHeaders& headers, const std::string& body) override {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        configure(client);
        auto res = client.Post(path, to_headers(headers), body, "application/json");
        return to_reply(res);
    }

    HttpReply get(const std::string& url, const HttpHeaders& headers, const HttpParams& params) override {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        configure(client);
        httplib::Params p(params.begin(), params.end());
        auto res = client.Get(path, p, to_headers(headers));
        return to_reply(res);
    }

private:
    void configure(httplib::Client& client) const {
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);
        client.set_follow_location(true);
    }

    static httplib::Headers to_headers(const HttpHeaders& headers) {
        return httplib::Headers(headers.begin(), headers.end());
    }

    static HttpReply to_reply(const httplib::Result& res) {
        if (!res)
            return {0, "", httplib::to_string(res.error())};
        return {res->status, res->body, ""};
    }

    std::chrono::seconds timeout_;
};

} // namespace

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout) {
    return std::make_shared<HttplibTransport>(timeout);
}

} // namespace autokg
