#include "causalfuzz/remote.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "causalfuzz/errors.hpp"

namespace causalfuzz {

namespace {

// host:port split for httplib::Client; accepts http://host:port[/].
std::pair<std::string, int> parse_url(const std::string& url) {
    std::string rest = url;
    const std::string prefix = "http://";
    if (rest.rfind(prefix, 0) == 0) rest = rest.substr(prefix.size());
    if (!rest.empty() && rest.back() == '/') rest.pop_back();
    auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
        throw ConfigError("remote url must be http://host:port, got: " + url);
    }
    int port = 0;
    try {
        port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad port in remote url: " + url);
    }
    return {rest.substr(0, colon), port};
}

bool retriable_status(int status) { return status >= 500; }

}  // namespace

RemotePredictor::RemotePredictor(std::string url, std::vector<std::string> schema,
                                 RetryPolicy retry)
    : url_(std::move(url)), schema_(std::move(schema)), retry_(retry) {}

std::vector<double> RemotePredictor::predict(const std::vector<std::vector<double>>& rows,
                                             ScoreKind kind, QueryMeter& meter) const {
    for (const auto& row : rows) {
        if (row.size() != schema_.size()) {
            throw SchemaMismatch("row has " + std::to_string(row.size()) +
                                 " values, schema expects " + std::to_string(schema_.size()));
        }
    }
    if (rows.empty()) return {};
    if (!meter.try_reserve(rows.size())) {
        throw BudgetExhausted("query budget exhausted: need " + std::to_string(rows.size()) +
                              ", remaining " + std::to_string(meter.remaining()));
    }

    auto [host, port] = parse_url(url_);
    std::vector<double> scores;
    scores.reserve(rows.size());
    try {
        for (std::size_t offset = 0; offset < rows.size(); offset += kMaxWireBatch) {
            std::size_t count = std::min(kMaxWireBatch, rows.size() - offset);
            nlohmann::ordered_json body;
            body["schema"] = schema_;
            body["rows"] = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < count; ++i) body["rows"].push_back(rows[offset + i]);
            body["kind"] = to_string(kind);
            const std::string payload = body.dump();

            std::size_t attempts_left = retry_.max_retries;
            std::size_t backoff_ms = retry_.initial_backoff_ms;
            while (true) {
                httplib::Client client(host, port);
                client.set_connection_timeout(5, 0);
                client.set_read_timeout(30, 0);
                auto res = client.Post("/predict", payload, "application/json");
                if (res && res->status == 200) {
                    nlohmann::json reply;
                    try {
                        reply = nlohmann::json::parse(res->body);
                    } catch (const nlohmann::json::parse_error&) {
                        throw TransportError("malformed response from " + url_);
                    }
                    if (!reply.contains("scores") || !reply["scores"].is_array() ||
                        reply["scores"].size() != count) {
                        throw TransportError("malformed response from " + url_);
                    }
                    for (const auto& s : reply["scores"]) scores.push_back(s.get<double>());
                    break;
                }
                if (res && res->status == 400) {
                    std::string detail;
                    try {
                        detail = nlohmann::json::parse(res->body).value("error", "");
                    } catch (const nlohmann::json::parse_error&) {
                    }
                    throw SchemaMismatch("server rejected request: " + detail);
                }
                // transport-level failure or 5xx: retry with backoff
                if (attempts_left == 0) {
                    throw TransportError("remote predict failed after " +
                                         std::to_string(retry_.max_retries) + " retries: " + url_);
                }
                if (res && !retriable_status(res->status)) {
                    throw TransportError("remote predict: unexpected status " +
                                         std::to_string(res->status));
                }
                --attempts_left;
                retries_.fetch_add(1);
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
        }
    } catch (...) {
        meter.release(rows.size());
        throw;
    }
    meter.commit(rows.size());
    return scores;
}

std::shared_ptr<RemotePredictor> connect_remote(const std::string& url,
                                                const std::vector<std::string>& schema,
                                                const RetryPolicy& retry) {
    auto [host, port] = parse_url(url);
    httplib::Client client(host, port);
    client.set_connection_timeout(5, 0);
    auto res = client.Get("/schema");
    if (!res || res->status != 200) {
        throw TransportError("handshake failed: GET " + url + "/schema");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw TransportError("malformed handshake response from " + url);
    }
    std::vector<std::string> server_schema;
    for (const auto& s : j.at("schema")) server_schema.push_back(s.get<std::string>());
    if (!schema.empty() && schema != server_schema) {
        std::string want, got;
        for (const auto& s : schema) want += (want.empty() ? "" : ",") + s;
        for (const auto& s : server_schema) got += (got.empty() ? "" : ",") + s;
        throw SchemaMismatch("schema mismatch: client [" + want + "] vs server [" + got + "]");
    }
    return std::make_shared<RemotePredictor>(url, server_schema, retry);
}

struct PredictorServer::Impl {
    std::shared_ptr<Predictor> model;
    httplib::Server server;
    std::thread worker;
    std::atomic<std::uint64_t> requests{0};
};

PredictorServer::PredictorServer(std::shared_ptr<Predictor> model)
    : impl_(std::make_unique<Impl>()) {
    impl_->model = std::move(model);
}

PredictorServer::~PredictorServer() { stop(); }

void PredictorServer::start() {
    auto* impl = impl_.get();
    impl->server.Get("/schema", [impl](const httplib::Request&, httplib::Response& res) {
        nlohmann::ordered_json j;
        j["schema"] = impl->model->schema();
        j["kinds"] = {"probability", "raw"};
        res.set_content(j.dump(), "application/json");
    });
    impl->server.Post("/predict", [impl](const httplib::Request& req, httplib::Response& res) {
        impl->requests.fetch_add(1);
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error&) {
            res.status = 400;
            res.set_content(R"({"error":"malformed request body"})", "application/json");
            return;
        }
        try {
            std::vector<std::string> schema;
            for (const auto& s : body.at("schema")) schema.push_back(s.get<std::string>());
            if (schema != impl->model->schema()) {
                res.status = 400;
                res.set_content(R"({"error":"schema mismatch"})", "application/json");
                return;
            }
            ScoreKind kind = score_kind_from_string(body.at("kind").get<std::string>());
            std::vector<std::vector<double>> rows;
            for (const auto& r : body.at("rows")) {
                rows.push_back(r.get<std::vector<double>>());
            }
            auto meter = QueryMeter::unlimited();
            auto scores = impl->model->predict(rows, kind, meter);
            nlohmann::ordered_json reply;
            reply["scores"] = scores;
            res.set_content(reply.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            nlohmann::ordered_json err;
            err["error"] = e.what();
            res.set_content(err.dump(), "application/json");
        }
    });

    port_ = impl->server.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw TransportError("could not bind loopback port");
    impl->worker = std::thread([impl]() { impl->server.listen_after_bind(); });
    impl->server.wait_until_ready();
}

void PredictorServer::stop() {
    if (impl_ && impl_->worker.joinable()) {
        impl_->server.stop();
        impl_->worker.join();
    }
}

std::string PredictorServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::uint64_t PredictorServer::requests_served() const { return impl_->requests.load(); }

}  // namespace causalfuzz
