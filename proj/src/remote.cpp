#include "hera/remote.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

namespace hera {

using nlohmann::json;

namespace {

std::string normalize_endpoint(std::string endpoint) {
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0)
    endpoint = "http://" + endpoint;
  while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
  return endpoint;
}

}  // namespace

struct RemoteSuite::Impl {
  Impl(std::string endpoint, double timeout_s) : client(normalize_endpoint(endpoint)) {
    auto secs = static_cast<time_t>(timeout_s);
    auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
  }

  json call(const std::string& role, json inputs) {
    json body = {{"role", role}, {"inputs", std::move(inputs)}};
    auto res = client.Post("/", body.dump(), "application/json");
    if (!res) throw RemoteError("predictor endpoint unreachable (role " + role + ")");
    if (res->status != 200)
      throw RemoteError("predictor endpoint returned status " + std::to_string(res->status));
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::exception& e) {
      throw RemoteError(std::string("malformed predictor response: ") + e.what());
    }
    if (!parsed.contains("output")) throw RemoteError("predictor response missing 'output'");
    return parsed["output"];
  }

  httplib::Client client;
};

RemoteSuite::RemoteSuite(std::string endpoint, double timeout_s)
    : impl_(std::make_unique<Impl>(std::move(endpoint), timeout_s)) {}

RemoteSuite::~RemoteSuite() = default;

std::optional<double> RemoteSuite::urc_predict(const UserRequest& request) const {
  json out = impl_->call("urc", {{"request_id", request.id}, {"text", request.text}});
  if (out.is_null()) return std::nullopt;
  double v = out.get<double>();
  if (v < 0.0 || v > 1.0 || !std::isfinite(v)) throw RemoteError("urc score out of [0,1]");
  return v;
}

std::optional<Subtask> RemoteSuite::sp_predict(ModelKind model, const Subtask& current) const {
  json out = impl_->call(model == ModelKind::SLM ? "sp_slm" : "sp_llm",
                         {{"content", current.content},
                          {"seq_id", current.seq_id},
                          {"phase", "execute"}});
  if (out.is_null()) return std::nullopt;
  return Subtask{current.seq_id + 1, out.get<std::string>(), model};
}

SLDistance RemoteSuite::dp_predict(const std::string& content, int seq_id) const {
  if (seq_id < 1) throw std::invalid_argument("seq_id must be >= 1");
  json out = impl_->call("dp", {{"content", content}, {"seq_id", seq_id}});
  if (out.is_null()) return SLDistance::infinite();
  int v = out.get<int>();
  return v < 0 ? SLDistance::infinite() : SLDistance(v);
}

std::vector<Subtask> RemoteSuite::sd_decompose(const Subtask& current,
                                               const Subtask& predicted_next_llm,
                                               int max_parts) const {
  json out = impl_->call("sd", {{"content", current.content},
                                {"seq_id", current.seq_id},
                                {"next_llm", predicted_next_llm.content},
                                {"max_parts", max_parts}});
  std::vector<Subtask> subs;
  if (out.is_array()) {
    for (const auto& item : out)
      subs.push_back(Subtask{current.seq_id, item.get<std::string>(), ModelKind::SLM});
  }
  if (subs.empty()) return {current};
  if (static_cast<int>(subs.size()) > max_parts) subs.resize(max_parts);
  return subs;
}

std::optional<Subtask> RemoteSuite::sle_rollout(const Subtask& current, int steps) const {
  json out = impl_->call("sp_slm", {{"content", current.content},
                                    {"seq_id", current.seq_id},
                                    {"phase", "track"},
                                    {"steps", steps}});
  if (out.is_null()) return std::nullopt;
  return Subtask{current.seq_id + steps, out.get<std::string>(), ModelKind::SLM};
}

struct RemoteEmbedder::Impl {
  Impl(std::string endpoint, double timeout_s) : client(normalize_endpoint(endpoint)) {
    auto secs = static_cast<time_t>(timeout_s);
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
  }
  httplib::Client client;
  mutable int dim = 0;
};

RemoteEmbedder::RemoteEmbedder(std::string endpoint, double timeout_s)
    : impl_(std::make_unique<Impl>(std::move(endpoint), timeout_s)) {}

RemoteEmbedder::~RemoteEmbedder() = default;

Embedding RemoteEmbedder::embed(const std::string& text) const {
  if (text.empty()) throw std::invalid_argument("empty input");
  json body = {{"text", text}};
  auto res = impl_->client.Post("/embed", body.dump(), "application/json");
  if (!res) throw RemoteError("embedder endpoint unreachable");
  if (res->status != 200)
    throw RemoteError("embedder endpoint returned status " + std::to_string(res->status));
  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::exception& e) {
    throw RemoteError(std::string("malformed embedding response: ") + e.what());
  }
  const json& arr = parsed.is_array() ? parsed : parsed.at("embedding");
  if (!arr.is_array() || arr.empty()) throw RemoteError("embedding response is not an array");
  Embedding v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  double norm = v.norm();
  if (norm == 0.0) throw RemoteError("embedding response is all-zero");
  v /= norm;
  impl_->dim = static_cast<int>(arr.size());
  return v;
}

int RemoteEmbedder::dim() const { return impl_->dim; }

}  // namespace hera
