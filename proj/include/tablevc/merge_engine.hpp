#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tablevc/error.hpp"
#include "tablevc/repository.hpp"
#include "tablevc/version_ops.hpp"

namespace tablevc {

enum class MergeMode { Fail, Skip, Accept };
enum class ConflictKind { False, True };
enum class Resolution { KeptTarget, KeptSource, Applied, Aborted };

std::string_view to_string(MergeMode m) noexcept;
std::string_view to_string(ConflictKind k) noexcept;
std::string_view to_string(Resolution r) noexcept;
std::optional<MergeMode> parse_merge_mode(std::string_view text) noexcept;

struct ConflictRecord {
  std::string sort_key;
  Row key_or_values;  // key tuple, or the full row for tables without a key
  ConflictKind kind = ConflictKind::False;
  int scenario = 0;  // 1..6 with a key, 1..3 without
  // With a key: the row in each version, absent when the key is missing. A
  // side without changes holds the base row, whose non-key values are null
  // unless they had to be read.
  bool target_changed = false;
  bool source_changed = false;
  std::optional<Row> base_row;
  std::optional<Row> target_row;
  std::optional<Row> source_row;
  // Without a key: net change of the multiplicity on each branch.
  std::int64_t delta_target = 0;
  std::int64_t delta_source = 0;
  Resolution resolution = Resolution::KeptTarget;
};

struct MergeReport {
  std::size_t applied_inserts = 0;
  std::size_t applied_deletes = 0;
  std::size_t true_conflicts = 0;
  std::size_t false_conflicts = 0;
  std::vector<ConflictRecord> conflicts;
  std::optional<CommitTs> committed_ts;
  bool empty_base = false;
};

class MergeConflictError : public Error {
 public:
  explicit MergeConflictError(MergeReport report)
      : Error(ErrorCode::MergeConflictFailure,
              std::to_string(report.true_conflicts) + " true conflict(s), merge aborted"),
        report_(std::move(report)) {}

  const MergeReport& report() const noexcept { return report_; }

 private:
  MergeReport report_;
};

struct MergeOptions {
  MergeMode mode = MergeMode::Fail;
  std::optional<SnapshotRef> base;
  bool use_lineage = true;  // look for a common base when none is given
};

// Classification of one key; nullopt means the key is absent in that version.
struct PkClassification {
  ConflictKind kind = ConflictKind::False;
  int scenario = 0;
  bool take_source = false;  // false conflicts only: apply the source version
};
PkClassification classify_conflict_pk(const std::optional<Row>& base, const std::optional<Row>& target,
                                      const std::optional<Row>& source);

struct NoPkClassification {
  ConflictKind kind = ConflictKind::False;
  int scenario = 0;
  std::int64_t result_skip = 0;    // resulting multiplicity per mode
  std::int64_t result_accept = 0;
};
// Throws NegativeCount on negative input.
NoPkClassification classify_conflict_nopk(std::int64_t n_base, std::int64_t n_target, std::int64_t n_source);

// Applies changes of `source` since the common base to the current version of
// `target` in one transaction. Throws MergeConflictError under Fail mode.
MergeReport merge(Repository& repo, TableId target, const SnapshotRef& source, const MergeOptions& options = {});

}  // namespace tablevc
