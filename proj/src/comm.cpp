#include "lowsync/comm.hpp"

#include <cmath>
#include <ostream>

#include "lowsync/errors.hpp"

namespace lowsync {

ReductionContext::ReductionContext(std::size_t rank_count) : rank_count_(rank_count) {
  if (rank_count_ == 0) throw InvalidInput("ReductionContext: rank_count must be >= 1");
}

std::vector<IndexRange> ReductionContext::partition(std::size_t n) const {
  std::vector<IndexRange> parts(rank_count_);
  const std::size_t base = n / rank_count_;
  const std::size_t extra = n % rank_count_;
  std::size_t pos = 0;
  for (std::size_t r = 0; r < rank_count_; ++r) {
    const std::size_t len = base + (r < extra ? 1 : 0);
    parts[r] = {pos, pos + len};
    pos += len;
  }
  return parts;
}

namespace {

// Sums blocks[lo, hi) into out, splitting the rank interval in halves.
void tree_sum(std::span<const std::vector<double>> blocks, std::size_t lo, std::size_t hi,
              std::vector<double>& out) {
  if (hi - lo == 1) {
    out = blocks[lo];
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> right;
  tree_sum(blocks, lo, mid, out);
  tree_sum(blocks, mid, hi, right);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += right[k];
}

}  // namespace

std::vector<double> ReductionContext::global_reduce_sum(
    std::span<const std::vector<double>> local_blocks, std::string_view tag) {
  if (local_blocks.size() != rank_count_)
    throw ContractViolation("global_reduce_sum: expected one block per rank");
  const std::size_t len = local_blocks.front().size();
  if (len == 0) throw ContractViolation("global_reduce_sum: empty payload");
  for (const auto& blk : local_blocks)
    if (blk.size() != len) throw ContractViolation("global_reduce_sum: mismatched block lengths");

  std::vector<double> out;
  tree_sum(local_blocks, 0, local_blocks.size(), out);
  log_.push_back({std::string(tag), len});
  return out;
}

CounterSnapshot ReductionContext::snapshot() const { return {log_.size(), log_}; }

std::size_t ReductionContext::count_tag(std::string_view tag) const {
  std::size_t n = 0;
  for (const auto& rec : log_)
    if (rec.tag == tag) ++n;
  return n;
}

void ReductionContext::write_log_csv(std::ostream& os) const {
  os << "seq,tag,payload_len\n";
  for (std::size_t k = 0; k < log_.size(); ++k)
    os << k << ',' << log_[k].tag << ',' << log_[k].payload_len << '\n';
}

std::vector<double> grouped_dots(
    ReductionContext& ctx,
    std::span<const std::pair<std::span<const double>, std::span<const double>>> pairs,
    std::string_view tag) {
  if (pairs.empty()) throw ContractViolation("grouped_dots: no inner products requested");
  const std::size_t n = pairs.front().first.size();
  for (const auto& [x, y] : pairs)
    if (x.size() != n || y.size() != n)
      throw ContractViolation("grouped_dots: vectors of unequal length");

  const auto parts = ctx.partition(n);
  std::vector<std::vector<double>> local(parts.size(), std::vector<double>(pairs.size(), 0.0));
  for (std::size_t r = 0; r < parts.size(); ++r) {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& [x, y] = pairs[k];
      double s = 0.0;
      for (std::size_t i = parts[r].begin; i < parts[r].end; ++i) s += x[i] * y[i];
      local[r][k] = s;
    }
  }
  return ctx.global_reduce_sum(local, tag);
}

double global_dot(ReductionContext& ctx, std::span<const double> x, std::span<const double> y,
                  std::string_view tag) {
  const std::pair<std::span<const double>, std::span<const double>> p{x, y};
  return grouped_dots(ctx, std::span(&p, 1), tag).front();
}

double global_norm(ReductionContext& ctx, std::span<const double> x, std::string_view tag) {
  return std::sqrt(global_dot(ctx, x, x, tag));
}

}  // namespace lowsync
