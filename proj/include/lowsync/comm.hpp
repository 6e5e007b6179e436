#pragma once

// Instrumented global reductions over simulated ranks.
//
// Every inner product and norm in the Krylov layer goes through a
// ReductionContext. A vector of length n is split into contiguous per-rank
// ranges; each rank forms local partial sums, and one call to
// global_reduce_sum combines them. One call is one synchronization no matter
// how many values it carries.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lowsync {

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

struct ReduceRecord {
  std::string tag;
  std::size_t payload_len = 0;
};

struct CounterSnapshot {
  std::size_t sync_count = 0;
  std::vector<ReduceRecord> log;
};

namespace tags {
inline constexpr std::string_view kMgsInnerProduct = "mgs.ip";
inline constexpr std::string_view kMgsNorm = "mgs.norm";
inline constexpr std::string_view kIocgsGrouped = "iocgs.grouped";
inline constexpr std::string_view kIocgsNorm = "iocgs.norm";
inline constexpr std::string_view kHybridGrouped = "hybrid.grouped";
inline constexpr std::string_view kHybridFallbackNorm = "hybrid.fallback_norm";
inline constexpr std::string_view kFinalNorm = "final.norm";
}  // namespace tags

/// Simulated distributed-memory layout plus synchronization counters.
///
/// Confined to one execution stream; may be moved between threads but not
/// shared concurrently.
class ReductionContext {
 public:
  explicit ReductionContext(std::size_t rank_count = 1);

  std::size_t rank_count() const noexcept { return rank_count_; }

  /// Balanced contiguous split of [0, n) into rank_count ranges (some may be
  /// empty when n < rank_count).
  std::vector<IndexRange> partition(std::size_t n) const;

  /// Elementwise sum of the per-rank blocks, combined by pairwise tree
  /// summation across ranks. Counts exactly one synchronization.
  std::vector<double> global_reduce_sum(std::span<const std::vector<double>> local_blocks,
                                        std::string_view tag);

  std::size_t sync_count() const noexcept { return log_.size(); }
  const std::vector<ReduceRecord>& log() const noexcept { return log_; }

  CounterSnapshot snapshot() const;
  void reset() noexcept { log_.clear(); }

  /// Count of log entries whose tag equals `tag`.
  std::size_t count_tag(std::string_view tag) const;

  /// CSV with header `seq,tag,payload_len`.
  void write_log_csv(std::ostream& os) const;

 private:
  std::size_t rank_count_;
  std::vector<ReduceRecord> log_;
};

/// Several inner products x_k . y_k over equal-length vectors, grouped into a
/// single global reduction.
std::vector<double> grouped_dots(ReductionContext& ctx,
                                 std::span<const std::pair<std::span<const double>,
                                                           std::span<const double>>> pairs,
                                 std::string_view tag);

double global_dot(ReductionContext& ctx, std::span<const double> x, std::span<const double> y,
                  std::string_view tag);

double global_norm(ReductionContext& ctx, std::span<const double> x, std::string_view tag);

}  // namespace lowsync
