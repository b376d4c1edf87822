#pragma once

#include <fstream>
#include <memory>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

namespace steward {

/// JSON-lines trace. Every record starts with the run id, a sequence number
/// that increases monotonically across the whole file, and the record kind.
/// Records carry no timestamps so identical runs produce identical bytes.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out) : out_(&out) {}
  static std::unique_ptr<TraceWriter> open(const std::string& path);

  void set_run(std::string run_id) { run_ = std::move(run_id); }
  const std::string& run() const { return run_; }

  void write(const std::string& kind, const nlohmann::json& fields);
  long records() const { return seq_; }

 private:
  TraceWriter() = default;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_ = nullptr;
  std::string run_;
  long seq_ = 0;
};

/// Parsed trace records, in file order.
std::vector<nlohmann::json> read_trace(const std::string& path);

}  // namespace steward
