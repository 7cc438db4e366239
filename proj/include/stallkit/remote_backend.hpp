#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stallkit/lm.hpp"

#include <httplib.h>
#include <json.hpp>

namespace stallkit {

// Client for the remote LM wire protocol:
//   POST /v1/encode  {"text": s}    -> {"ids": [int]}
//   POST /v1/decode  {"ids": [int]} -> {"text": s}
//   POST /v1/logits  {"ids": [int]} -> {"logits": [float; K]}
//   GET  /v1/vocab                  -> {"size": K, "newline_id": int}
class RemoteBackend : public LmBackend {
public:
    explicit RemoteBackend(std::string base_url) : base_url_(std::move(base_url)) {
        nlohmann::json v = get_json("/v1/vocab");
        vocab_size_ = v.at("size").get<int>();
        newline_id_ = v.at("newline_id").get<int>();
    }

    int vocab_size() const override { return vocab_size_; }
    int newline_id() const override { return newline_id_; }

    std::vector<int> encode(const std::string& text) const override {
        nlohmann::json req{{"text", text}};
        return post_json("/v1/encode", req).at("ids").get<std::vector<int>>();
    }

    std::string decode(const std::vector<int>& ids) const override {
        nlohmann::json req{{"ids", ids}};
        return post_json("/v1/decode", req).at("text").get<std::string>();
    }

    std::vector<double> next_logits(const std::vector<int>& ids) const override {
        nlohmann::json req{{"ids", ids}};
        auto logits = post_json("/v1/logits", req).at("logits").get<std::vector<double>>();
        if (static_cast<int>(logits.size()) != vocab_size_)
            throw BackendUnavailable("server returned " + std::to_string(logits.size()) +
                                     " logits, expected " + std::to_string(vocab_size_));
        return logits;
    }

private:
    std::string base_url_;
    int vocab_size_ = 0;
    int newline_id_ = 0;

    // one client per call keeps the backend usable from multiple threads
    nlohmann::json post_json(const std::string& path, const nlohmann::json& body) const {
        httplib::Client cli(base_url_);
        cli.set_connection_timeout(5);
        auto res = cli.Post(path, body.dump(), "application/json");
        return unwrap(path, res);
    }

    nlohmann::json get_json(const std::string& path) const {
        httplib::Client cli(base_url_);
        cli.set_connection_timeout(5);
        auto res = cli.Get(path);
        return unwrap(path, res);
    }

    static nlohmann::json unwrap(const std::string& path, const httplib::Result& res) {
        if (!res) throw BackendUnavailable("no response from " + path);
        if (res->status != 200)
            throw BackendUnavailable(path + " returned status " + std::to_string(res->status));
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded()) throw BackendUnavailable(path + " returned invalid JSON");
        return j;
    }
};

}  // namespace stallkit
