#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "worcs/search.hpp"

namespace worcs {

/// A dataset the service can run sessions on. Immutable once registered.
struct RegisteredDataset {
  std::string id;
  Dataset ds;
  DemandD demand;
  std::string description;
};

/// Bundled Iris (raw) and Wine (standardized), Euclidean, power-law demand with
/// exponent 0.4 drawn from the same seed the harness uses for master seed 0.
std::vector<std::shared_ptr<const RegisteredDataset>> default_registry();

struct Reply {
  int status = 200;
  nlohmann::json body;
};

/// Human-as-oracle sessions over HTTP+JSON. Handlers are transport-free so
/// they can be driven directly; run_server binds them to routes.
///
/// Each session is persisted as an append-only JSONL file
/// `<data_dir>/sessions/<session_id>.jsonl` (a create record followed by one
/// record per answer) and rebuilt on startup by replaying its answers.
class SessionService {
 public:
  SessionService(std::filesystem::path data_dir,
                 std::vector<std::shared_ptr<const RegisteredDataset>> datasets);
  ~SessionService();

  /// Body: {dataset_id, strategy, alpha, seed?}.
  Reply create_session(const nlohmann::json& body);
  /// Body: {choice: "x"|"y"|"unsure", seq?}. `seq` is the 1-based number of
  /// this answer; resending the last applied seq returns the current state
  /// without applying anything.
  Reply post_answer(const std::string& session_id, const nlohmann::json& body);
  Reply get_session(const std::string& session_id) const;
  Reply list_datasets() const;

  std::size_t session_count() const;
  /// Sessions restored from disk by the constructor.
  std::size_t restored() const { return restored_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<Session> load(const std::filesystem::path& file);
  nlohmann::json state_json(const Session& s, bool full) const;
  void append(const Session& s, const nlohmann::json& record) const;

  std::filesystem::path session_dir_;
  std::map<std::string, std::shared_ptr<const RegisteredDataset>> datasets_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t restored_ = 0;
};

/// Serves the API (and `ui_dir` under /ui when given) until the process is
/// stopped. Returns nonzero if the port cannot be bound.
int run_server(SessionService& service, const std::string& host, int port,
               const std::optional<std::filesystem::path>& ui_dir = std::nullopt);

}  // namespace worcs
