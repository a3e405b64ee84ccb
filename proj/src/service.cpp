#include "worcs/service.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

#include <httplib.h>

#include "worcs/datasets.hpp"
#include "worcs/http_routes.hpp"

namespace worcs {

namespace fs = std::filesystem;
using nlohmann::json;

struct SessionService::Session {
  std::string id;
  std::shared_ptr<const RegisteredDataset> data;
  Strategy strategy;
  double alpha = 1;
  std::string created_at;
  std::unique_ptr<SearchEngine> engine;
  std::mutex mu;
};

namespace {

constexpr std::size_t kMaxDisplayFeatures = 8;

Reply error(int status, std::string code, std::string message) {
  return {status, {{"code", std::move(code)}, {"message", std::move(message)}}};
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string new_session_id() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t salt = [] {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }();
  char buf[24];
  std::snprintf(buf, sizeof buf, "s%016llx",
                static_cast<unsigned long long>(splitmix64(salt + counter.fetch_add(1))));
  return buf;
}

bool allowed_strategy(StrategyKind kind) {
  return kind == StrategyKind::WorcsIIRank || kind == StrategyKind::WorcsIIWeak ||
         kind == StrategyKind::FastGTS || kind == StrategyKind::Random;
}

std::optional<Answer> parse_choice(const json& body) {
  if (!body.is_object() || !body.contains("choice") || !body["choice"].is_string()) return std::nullopt;
  const auto c = body["choice"].get<std::string>();
  if (c == "x") return Answer::CloserX;
  if (c == "y") return Answer::CloserY;
  if (c == "unsure") return Answer::Unsure;
  return std::nullopt;
}

std::string choice_name(Answer a) {
  switch (a) {
    case Answer::CloserX: return "x";
    case Answer::CloserY: return "y";
    case Answer::Unsure: return "unsure";
  }
  return "unsure";
}

std::string status_name(EngineStatus s) {
  switch (s) {
    case EngineStatus::Running: return "pending";
    case EngineStatus::Found: return "found";
    case EngineStatus::FoundProbable: return "found_probable";
    case EngineStatus::FailedNoProgress: return "no_progress";
    case EngineStatus::Eliminated: return "eliminated";
  }
  return "unknown";
}

json item_json(const Dataset& ds, Index i) {
  json features = json::array();
  if (ds.has_features()) {
    const auto row = ds.features().row(i);
    for (Index k = 0; k < row.size() && static_cast<std::size_t>(k) < kMaxDisplayFeatures; ++k)
      features.push_back(row(k));
  }
  return {{"id", ds.id(i)}, {"label", ds.label(i)}, {"features", features}};
}

}  // namespace

std::vector<std::shared_ptr<const RegisteredDataset>> default_registry() {
  std::vector<std::shared_ptr<const RegisteredDataset>> out;
  const std::pair<const char*, const char*> bundled[] = {
      {"iris", "Fisher's Iris flowers (150 items, 4 features)"},
      {"wine", "Wine recognition (178 items, 13 standardized features)"}};
  for (const auto& [name, description] : bundled) {
    if (!find_dataset_file(name)) continue;
    auto ds = load_dataset({name, Metric::Euclidean, std::string_view(name) == "wine"});
    auto demand = power_law_demand<double>(ds.size(), 0.4, derive_seed(0, "demand"));
    out.push_back(std::make_shared<const RegisteredDataset>(
        RegisteredDataset{name, std::move(ds), std::move(demand), description}));
  }
  return out;
}

SessionService::SessionService(fs::path data_dir,
                               std::vector<std::shared_ptr<const RegisteredDataset>> datasets)
    : session_dir_(std::move(data_dir) / "sessions") {
  for (auto& d : datasets) datasets_.emplace(d->id, std::move(d));
  fs::create_directories(session_dir_);
  for (const auto& entry : fs::directory_iterator(session_dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    try {
      if (auto s = load(entry.path())) {
        sessions_.emplace(s->id, std::move(s));
        ++restored_;
      }
    } catch (const std::exception& e) {
      std::cerr << "skipping session file " << entry.path() << ": " << e.what() << '\n';
    }
  }
}

SessionService::~SessionService() = default;

std::shared_ptr<SessionService::Session> SessionService::load(const fs::path& file) {
  std::ifstream in(file);
  std::string line;
  if (!std::getline(in, line)) return nullptr;
  const json head = json::parse(line);
  auto s = std::make_shared<Session>();
  s->id = head.at("session_id").get<std::string>();
  const auto it = datasets_.find(head.at("dataset_id").get<std::string>());
  if (it == datasets_.end()) throw std::runtime_error("unknown dataset " + head.at("dataset_id").dump());
  s->data = it->second;
  s->strategy = {parse_strategy_kind(head.at("strategy").get<std::string>()),
                 head.value("fast_gts_k", Index{10}), head.at("seed").get<std::uint64_t>()};
  s->alpha = head.at("alpha").get<double>();
  s->created_at = head.value("created_at", std::string());
  s->engine = make_engine(s->data->ds, s->data->demand, s->alpha, s->strategy);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    const auto choice = parse_choice(rec);
    if (!choice || !s->engine->pending()) throw std::runtime_error("corrupt answer record");
    s->engine->answer(*choice);
  }
  return s;
}

void SessionService::append(const Session& s, const json& record) const {
  std::ofstream out(session_dir_ / (s.id + ".jsonl"), std::ios::app);
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot write session file for " + s.id);
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

json SessionService::state_json(const Session& s, bool full) const {
  const SearchEngine& e = *s.engine;
  const Dataset& ds = s.data->ds;
  json out = {{"session_id", s.id},
              {"status", status_name(e.result().status)},
              {"answers", e.steps().size()},
              {"progress", {{"vs_size", e.version_space().size()}, {"vs_mass", e.version_space().mass()}}}};
  if (auto q = e.pending()) {
    out["query"] = {{"x", item_json(ds, q->first)}, {"y", item_json(ds, q->second)}};
  } else if (e.result().point >= 0) {
    out["result"] = item_json(ds, e.result().point);
  } else {
    out["result"] = nullptr;
  }
  if (full) {
    out["dataset_id"] = s.data->id;
    out["strategy"] = to_string(s.strategy.kind);
    out["alpha"] = s.alpha;
    out["seed"] = s.strategy.seed;
    out["created_at"] = s.created_at;
    json history = json::array();
    for (const Step& st : e.steps())
      history.push_back({{"x", ds.id(st.x)},
                         {"y", ds.id(st.y)},
                         {"choice", choice_name(st.answer)},
                         {"removed", st.removed},
                         {"vs_size", st.vs_size},
                         {"vs_mass", st.vs_mass}});
    out["history"] = history;
  }
  return out;
}

Reply SessionService::create_session(const json& body) {
  if (!body.is_object()) return error(422, "invalid_body", "expected a JSON object");
  if (!body.contains("dataset_id") || !body["dataset_id"].is_string())
    return error(422, "invalid_body", "dataset_id must be a string");
  const auto it = datasets_.find(body["dataset_id"].get<std::string>());
  if (it == datasets_.end())
    return error(404, "unknown_dataset", "no dataset named " + body["dataset_id"].dump());
  if (!body.contains("strategy") || !body["strategy"].is_string())
    return error(422, "invalid_body", "strategy must be a string");
  StrategyKind kind;
  try {
    kind = parse_strategy_kind(body["strategy"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    return error(422, "unknown_strategy", e.what());
  }
  if (!allowed_strategy(kind))
    return error(422, "unsupported_strategy",
                 to_string(kind) + " is not offered for interactive sessions; use worcs2-rank, "
                                   "worcs2-weak, fast-gts or random");
  const json alpha_j = body.value("alpha", json(1.0));
  if (!alpha_j.is_number() || !(alpha_j.get<double>() >= 1.0))
    return error(422, "invalid_alpha", "alpha must be a number >= 1");
  const json seed_j = body.value("seed", json(0));
  if (!seed_j.is_number_unsigned() && !(seed_j.is_number_integer() && seed_j.get<long long>() >= 0))
    return error(422, "invalid_seed", "seed must be a non-negative integer");

  auto s = std::make_shared<Session>();
  s->id = new_session_id();
  s->data = it->second;
  s->strategy = {kind, body.value("fast_gts_k", Index{10}), seed_j.get<std::uint64_t>()};
  s->alpha = alpha_j.get<double>();
  s->created_at = utc_now();
  s->engine = make_engine(s->data->ds, s->data->demand, s->alpha, s->strategy);
  append(*s, {{"session_id", s->id},
              {"dataset_id", s->data->id},
              {"strategy", to_string(kind)},
              {"fast_gts_k", s->strategy.fast_gts_k},
              {"alpha", s->alpha},
              {"seed", s->strategy.seed},
              {"created_at", s->created_at}});
  json out = state_json(*s, false);
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(s->id, s);
  }
  return {201, out};
}

Reply SessionService::post_answer(const std::string& session_id, const json& body) {
  const auto s = find(session_id);
  if (!s) return error(404, "unknown_session", "no session " + session_id);
  const auto choice = parse_choice(body);
  if (!choice) return error(422, "invalid_choice", "choice must be \"x\", \"y\" or \"unsure\"");
  std::lock_guard lock(s->mu);
  const std::size_t applied = s->engine->steps().size();
  if (body.contains("seq")) {
    if (!body["seq"].is_number_integer()) return error(422, "invalid_seq", "seq must be an integer");
    const auto seq = body["seq"].get<long long>();
    if (seq == static_cast<long long>(applied) && applied > 0) return {200, state_json(*s, false)};
    if (seq != static_cast<long long>(applied) + 1)
      return error(409, "seq_conflict",
                   "expected seq " + std::to_string(applied + 1) + ", got " + std::to_string(seq));
  }
  if (!s->engine->pending()) return error(409, "no_pending_query", "session " + session_id + " is done");
  append(*s, {{"seq", applied + 1}, {"choice", choice_name(*choice)}});
  s->engine->answer(*choice);
  return {200, state_json(*s, false)};
}

Reply SessionService::get_session(const std::string& session_id) const {
  const auto s = find(session_id);
  if (!s) return error(404, "unknown_session", "no session " + session_id);
  std::lock_guard lock(s->mu);
  return {200, state_json(*s, true)};
}

Reply SessionService::list_datasets() const {
  json list = json::array();
  for (const auto& [id, d] : datasets_)
    list.push_back({{"id", id},
                    {"size", d->ds.size()},
                    {"dim", d->ds.dim()},
                    {"metric", to_string(d->ds.metric())},
                    {"description", d->description}});
  return {200, {{"datasets", list}}};
}

void install_routes(httplib::Server& server, SessionService& service) {
  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req) {
    return json::parse(req.body, nullptr, /*allow_exceptions=*/false);
  };
  server.Post("/v1/sessions", [&service, send, parse](const httplib::Request& req, httplib::Response& res) {
    const json body = parse(req);
    send(res, body.is_discarded() ? error(422, "invalid_json", "request body is not JSON")
                                  : service.create_session(body));
  });
  server.Post(R"(/v1/sessions/([^/]+)/answer)",
              [&service, send, parse](const httplib::Request& req, httplib::Response& res) {
                const json body = parse(req);
                send(res, body.is_discarded() ? error(422, "invalid_json", "request body is not JSON")
                                              : service.post_answer(req.matches[1], body));
              });
  server.Get(R"(/v1/sessions/([^/]+))", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_session(req.matches[1]));
  });
  server.Get("/v1/datasets", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.list_datasets());
  });
  server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, error(500, "internal", what));
  });
}

int run_server(SessionService& service, const std::string& host, int port,
               const std::optional<fs::path>& ui_dir) {
  httplib::Server server;
  install_routes(server, service);
  if (ui_dir && !server.set_mount_point("/ui", ui_dir->string())) {
    std::cerr << "ui directory " << *ui_dir << " not found\n";
    return 1;
  }
  if (!server.bind_to_port(host, port)) {
    std::cerr << "cannot bind " << host << ':' << port << '\n';
    return 1;
  }
  std::cout << "listening on http://" << host << ':' << port << '\n' << std::flush;
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace worcs
