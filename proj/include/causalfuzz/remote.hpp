#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "causalfuzz/predictor.hpp"

namespace causalfuzz {

struct RetryPolicy {
    std::size_t max_retries = 2;
    std::size_t initial_backoff_ms = 100;
};

// Client for the HTTP wire protocol:
//   GET  /schema  -> {"schema":[...],"kinds":[...]}
//   POST /predict {"schema":[...],"rows":[[...]...],"kind":"probability"|"raw"}
//                 -> 200 {"scores":[...]} | 400 {"error":...}
// Batches above 256 rows are split client-side. Transport failures are
// retried with exponential backoff; schema errors are never retried.
class RemotePredictor : public Predictor {
public:
    RemotePredictor(std::string url, std::vector<std::string> schema, RetryPolicy retry);

    const std::vector<std::string>& schema() const override { return schema_; }
    std::string id() const override { return url_; }
    std::vector<double> predict(const std::vector<std::vector<double>>& rows,
                                ScoreKind kind, QueryMeter& meter) const override;

    std::uint64_t retries_recorded() const { return retries_.load(); }

    static constexpr std::size_t kMaxWireBatch = 256;

private:
    std::string url_;  // http://host:port
    std::vector<std::string> schema_;
    RetryPolicy retry_;
    mutable std::atomic<std::uint64_t> retries_{0};
};

// Handshakes GET /schema and verifies it matches `schema` exactly (order
// matters). Pass an empty schema to adopt the server's.
std::shared_ptr<RemotePredictor> connect_remote(const std::string& url,
                                                const std::vector<std::string>& schema,
                                                const RetryPolicy& retry = {});

// Loopback server exposing any Predictor over the wire protocol. Runs on a
// background thread; used for remote-vs-builtin parity checks.
class PredictorServer {
public:
    explicit PredictorServer(std::shared_ptr<Predictor> model);
    ~PredictorServer();

    PredictorServer(const PredictorServer&) = delete;
    PredictorServer& operator=(const PredictorServer&) = delete;

    // Binds to a free loopback port and starts serving.
    void start();
    void stop();

    int port() const { return port_; }
    std::string url() const;
    std::uint64_t requests_served() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace causalfuzz
