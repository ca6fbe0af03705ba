#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "visa/errors.hpp"

namespace visa::chat {

/// One piece of a user turn: either plain text or an image attachment
/// referenced by file path.
struct Segment {
    enum class Kind { text, image };
    Kind kind = Kind::text;
    std::string text;        // kind == text
    std::string image_path;  // kind == image

    static Segment make_text(std::string t) {
        return {Kind::text, std::move(t), {}};
    }
    static Segment make_image(std::string path) {
        return {Kind::image, {}, std::move(path)};
    }
};

struct Decoding {
    double temperature = 0.0;
    int max_tokens = 512;
};

struct ChatRequest {
    std::string system;
    std::vector<Segment> user;
    Decoding decoding;

    std::size_t image_count() const;

    /// Canonical textual form of the request, with images rendered as
    /// {image:<path>} placeholders. Deterministic; used for golden-file
    /// comparison and request logging.
    std::string render() const;
};

/// Abstract multimodal inference endpoint: takes a chat request, returns
/// the generated text. Throws TransportError on failure.
class InferenceClient {
public:
    virtual ~InferenceClient() = default;
    virtual std::string generate(const ChatRequest& req) = 0;
};

/// In-process scripted endpoint for tests and offline runs. Responses are
/// produced by a callback over the rendered request.
class ScriptedClient : public InferenceClient {
public:
    using Responder = std::function<std::string(const ChatRequest&)>;
    explicit ScriptedClient(Responder responder) : responder_(std::move(responder)) {}

    /// Fails the first `failures` calls with TransportError, then answers.
    ScriptedClient(Responder responder, int failures)
        : responder_(std::move(responder)), failures_remaining_(failures) {}

    std::string generate(const ChatRequest& req) override {
        ++calls_;
        if (failures_remaining_ > 0) {
            --failures_remaining_;
            throw TransportError("scripted transport failure");
        }
        return responder_(req);
    }

    int calls() const { return calls_; }

private:
    Responder responder_;
    int failures_remaining_ = 0;
    int calls_ = 0;
};

/// Retries the wrapped client on TransportError with a bounded attempt
/// count; rethrows once exhausted.
class RetryingClient : public InferenceClient {
public:
    RetryingClient(InferenceClient& inner, int max_retries)
        : inner_(inner), max_retries_(max_retries) {}

    std::string generate(const ChatRequest& req) override;

    int retries_logged() const { return retries_logged_; }

private:
    InferenceClient& inner_;
    int max_retries_;
    int retries_logged_ = 0;
};

struct EndpointConfig {
    std::string url;           // e.g. http://host:port/v1/chat/completions
    std::string auth_env;      // env var holding the bearer token, may be empty
    std::string model = "default";
    int timeout_seconds = 120;
};

/// JSON-over-HTTP adapter speaking an OpenAI-style chat completion dialect
/// with base64 image attachments.
class HttpChatClient : public InferenceClient {
public:
    explicit HttpChatClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
    std::string generate(const ChatRequest& req) override;

private:
    EndpointConfig cfg_;
};

/// Scripted HTTP mock implementing the same wire contract as
/// HttpChatClient expects. Runs on a background thread.
class MockChatServer {
public:
    explicit MockChatServer(ScriptedClient::Responder responder);
    ~MockChatServer();

    int port() const { return port_; }
    std::string url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

/// Reconstruct a ChatRequest's text content from the wire JSON body (the
/// mock server uses this so scripted responders see the same request shape
/// the in-process path sees).
ChatRequest chat_request_from_wire(const std::string& body);

}  // namespace visa::chat
