#include "visa/chat.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace visa::chat {

using nlohmann::json;

std::size_t ChatRequest::image_count() const {
    std::size_t n = 0;
    for (const auto& s : user) {
        if (s.kind == Segment::Kind::image) ++n;
    }
    return n;
}

std::string ChatRequest::render() const {
    std::ostringstream os;
    os << "System:\n" << system << "\n\nUser:\n";
    for (const auto& s : user) {
        if (s.kind == Segment::Kind::image) {
            os << "{image:" << s.image_path << "}";
        } else {
            os << s.text;
        }
    }
    return os.str();
}

std::string RetryingClient::generate(const ChatRequest& req) {
    int attempt = 0;
    for (;;) {
        try {
            return inner_.generate(req);
        } catch (const TransportError&) {
            if (attempt >= max_retries_) throw;
            ++attempt;
            ++retries_logged_;
        }
    }
}

namespace {

std::string base64_encode(const std::string& data) {
    static const char tbl[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < data.size()) {
        const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                           (static_cast<unsigned char>(data[i + 1]) << 8) |
                           static_cast<unsigned char>(data[i + 2]);
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += tbl[v & 63];
        i += 3;
    }
    if (i + 1 == data.size()) {
        const unsigned v = static_cast<unsigned char>(data[i]) << 16;
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == data.size()) {
        const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                           (static_cast<unsigned char>(data[i + 1]) << 8);
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TransportError("cannot read image file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json to_wire(const ChatRequest& req, const std::string& model) {
    json user_content = json::array();
    for (const auto& s : req.user) {
        if (s.kind == Segment::Kind::image) {
            user_content.push_back(
                {{"type", "image_url"},
                 {"image_url",
                  {{"url", "data:image/png;base64," + base64_encode(read_file(s.image_path))}}}});
        } else {
            user_content.push_back({{"type", "text"}, {"text", s.text}});
        }
    }
    return json{{"model", model},
                {"temperature", req.decoding.temperature},
                {"max_tokens", req.decoding.max_tokens},
                {"messages",
                 json::array({json{{"role", "system"}, {"content", req.system}},
                              json{{"role", "user"}, {"content", user_content}}})}};
}

}  // namespace

std::string HttpChatClient::generate(const ChatRequest& req) {
    httplib::Client cli(cfg_.url);
    cli.set_read_timeout(cfg_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!cfg_.auth_env.empty()) {
        if (const char* token = std::getenv(cfg_.auth_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }
    const std::string body = to_wire(req, cfg_.model).dump();
    auto res = cli.Post("/v1/chat/completions", headers, body, "application/json");
    if (!res) {
        throw TransportError("endpoint unreachable: " + cfg_.url);
    }
    if (res->status != 200) {
        throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
        json j = json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed endpoint response: ") + e.what());
    }
}

ChatRequest chat_request_from_wire(const std::string& body) {
    json j = json::parse(body);
    ChatRequest req;
    req.decoding.temperature = j.value("temperature", 0.0);
    req.decoding.max_tokens = j.value("max_tokens", 512);
    for (const auto& msg : j.at("messages")) {
        const auto role = msg.at("role").get<std::string>();
        if (role == "system") {
            req.system = msg.at("content").get<std::string>();
        } else if (role == "user") {
            for (const auto& part : msg.at("content")) {
                const auto type = part.at("type").get<std::string>();
                if (type == "text") {
                    req.user.push_back(Segment::make_text(part.at("text").get<std::string>()));
                } else if (type == "image_url") {
                    // Inline payload; the original path is not on the wire.
                    req.user.push_back(Segment::make_image("<inline>"));
                }
            }
        }
    }
    return req;
}

struct MockChatServer::Impl {
    httplib::Server server;
    std::thread thread;
};

MockChatServer::MockChatServer(ScriptedClient::Responder responder)
    : impl_(std::make_unique<Impl>()) {
    impl_->server.Post("/v1/chat/completions",
                       [responder](const httplib::Request& hreq, httplib::Response& hres) {
                           try {
                               ChatRequest req = chat_request_from_wire(hreq.body);
                               json out = {{"choices",
                                            json::array({json{{"message",
                                                               {{"role", "assistant"},
                                                                {"content", responder(req)}}}}})}};
                               hres.set_content(out.dump(), "application/json");
                           } catch (const std::exception& e) {
                               hres.status = 500;
                               hres.set_content(e.what(), "text/plain");
                           }
                       });
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

MockChatServer::~MockChatServer() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockChatServer::url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
}

}  // namespace visa::chat
