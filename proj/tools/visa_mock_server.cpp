// Standalone scripted mock speaking the same chat wire contract the
// harness's HTTP client expects. Useful for exercising a real network
// round trip without a model server.

#include <fstream>
#include <iostream>
#include <mutex>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "visa/chat.hpp"

int main(int argc, char** argv) {
    CLI::App app{"visa-mock-server: scripted chat-completion endpoint"};
    std::string script_path;
    std::string fixed;
    app.add_option("--script", script_path,
                   "JSONL of {\"response\": ...}, served in order then repeating the last");
    app.add_option("--fixed", fixed, "serve one fixed response forever");
    CLI11_PARSE(app, argc, argv);

    std::vector<std::string> responses;
    if (!script_path.empty()) {
        std::ifstream in(script_path);
        if (!in) {
            std::cerr << "cannot open " << script_path << "\n";
            return 1;
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            responses.push_back(nlohmann::json::parse(line).at("response").get<std::string>());
        }
    }
    if (!fixed.empty()) responses.push_back(fixed);
    if (responses.empty()) responses.push_back("No answer.");

    std::mutex mu;
    std::size_t pos = 0;
    visa::chat::MockChatServer server([&](const visa::chat::ChatRequest&) {
        std::lock_guard<std::mutex> lock(mu);
        const auto i = std::min(pos, responses.size() - 1);
        ++pos;
        return responses[i];
    });

    std::cout << "listening on " << server.url() << " (POST /v1/chat/completions)\n";
    std::cout << "press enter to stop\n";
    std::cin.get();
    return 0;
}
