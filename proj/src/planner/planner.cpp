#include "vrd/planner/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>

namespace vrd::planner {

namespace {

constexpr double kInvalidLogit = -1e9;

}  // namespace

std::size_t TargetCandidates::valid_count() const { return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true)); }

ad::Tensor TargetCandidates::as_tensor() const {
  std::vector<double> v;
  v.reserve(anchors.size() * 2);
  for (auto p : anchors) {
    v.push_back(p.x);
    v.push_back(p.y);
  }
  return ad::Tensor::from({anchors.size(), 2}, std::move(v));
}

TargetCandidates generate_candidates(const scene::Scenario& scenario, const scene::Pose2& ego_frame, double speed,
                                     double horizon_seconds, const PlannerConfig& cfg) {
  const std::size_t n = cfg.num_anchors;
  if (n == 0) throw std::invalid_argument("generate_candidates: N must be positive");
  if (scenario.polylines.empty()) throw std::invalid_argument("generate_candidates: empty map");
  const double reach = std::max(0.0, speed) * horizon_seconds + cfg.reach_margin;

  std::vector<const scene::MapPolyline*> lanes;
  for (const auto& p : scenario.polylines)
    if (p.kind == scene::PolylineKind::LaneCenterline) lanes.push_back(&p);
  std::sort(lanes.begin(), lanes.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::vector<Point2> found;
  std::set<std::pair<long long, long long>> seen;
  for (const auto* lane : lanes) {
    for (auto p : scene::resample_polyline(lane->points, cfg.anchor_spacing)) {
      const Point2 q = ego_frame.to_local(p);
      if (std::hypot(q.x, q.y) > reach) continue;
      const auto key = std::make_pair(std::llround(q.x / cfg.dedup_grid),
                                      std::llround(q.y / cfg.dedup_grid));
      if (!seen.insert(key).second) continue;
      found.push_back(q);
    }
  }

  TargetCandidates out;
  if (found.empty()) {
    // Radial fan ahead of the ego: 8 headings per ring, rings out to the reach.
    out.fallback = true;
    const std::size_t rings = (n + 7) / 8;
    for (std::size_t i = 0; i < n; ++i) {
      const double angle = -std::numbers::pi / 3 + (2 * std::numbers::pi / 3) * static_cast<double>(i % 8) / 7.0;
      const double radius = reach * static_cast<double>(i / 8 + 1) / static_cast<double>(rings);
      out.anchors.push_back({radius * std::cos(angle), radius * std::sin(angle)});
      out.valid.push_back(true);
    }
    return out;
  }
  if (found.size() >= n) {
    for (std::size_t i = 0; i < n; ++i) {
      out.anchors.push_back(found[i * found.size() / n]);
      out.valid.push_back(true);
    }
  } else {
    out.anchors = found;
    out.valid.assign(found.size(), true);
    for (std::size_t i = found.size(); i < n; ++i) {
      out.anchors.push_back(found[i % found.size()]);
      out.valid.push_back(false);
    }
  }
  return out;
}

double target_log_density(const TargetDistribution& d, std::size_t n, Point2 offset) {
  const double p = d.probs.at(n);
  const double dx = offset.x - d.offsets.at(n, 0), dy = offset.y - d.offsets.at(n, 1);
  return std::log(p) - 0.5 * (dx * dx + dy * dy) - std::log(2.0 * std::numbers::pi);
}

ConditionedMlp::ConditionedMlp(ad::ParameterSet& params, const std::string& name, std::size_t context, std::size_t row,
                               std::vector<std::size_t> widths, std::uint64_t seed) {
  if (widths.size() < 2) throw std::invalid_argument("ConditionedMlp needs a hidden and an output width");
  context_ = ad::Linear(params, name + ".context", context, widths.front(), seed);
  // The row path shares the context path's bias.
  row_weight_ = params.add(name + ".row.weight", {row, widths.front()}, seed);
  rest_ = ad::Mlp(params, name + ".rest", widths, seed);
}

ad::Tensor ConditionedMlp::operator()(const ad::Tensor& context, const ad::Tensor& rows) const {
  using namespace ad;
  Tensor h = relu(add_row(matmul(rows, row_weight_), context_(context)));
  return rest_(h);
}

Planner::Planner(ad::ParameterSet& params, const PlannerConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  const std::size_t ctx = cfg.slots * cfg.latent_dim;
  u_ = ConditionedMlp(params, "planner.u", ctx, 2, {cfg.hidden, cfg.hidden, 1}, seed);
  v_ = ConditionedMlp(params, "planner.v", ctx, 2, {cfg.hidden, cfg.hidden, 2}, seed);
  generator_ = ConditionedMlp(params, "planner.generator", ctx, 2,
                              {cfg.generator_hidden, cfg.generator_hidden, cfg.plan_steps * 4}, seed);
  g_ = ConditionedMlp(params, "planner.score", ctx, cfg.plan_steps * 4, {cfg.hidden, cfg.hidden, 1}, seed);
}

TargetDistribution Planner::score_targets(const LatentScene& z, const TargetCandidates& c) const {
  using namespace ad;
  if (z.slots() * z.dim() != cfg_.slots * cfg_.latent_dim) throw ShapeError("score_targets: latent shape mismatch");
  if (c.size() == 0 || c.valid.size() != c.size()) throw ShapeError("score_targets: malformed candidate set");
  if (c.valid_count() == 0) throw std::invalid_argument("score_targets: no valid anchor");
  const Tensor ctx = z.flattened();
  const Tensor anchors = scale(c.as_tensor(), cfg_.coord_scale);
  std::vector<double> penalty(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!c.valid[i]) penalty[i] = kInvalidLogit;
  TargetDistribution d;
  d.logits = add(reshape(u_(ctx, anchors), {1, c.size()}), Tensor::from({1, c.size()}, std::move(penalty)));
  d.probs = softmax(d.logits);
  d.offsets = v_(ctx, anchors);
  return d;
}

std::vector<std::size_t> Planner::top_targets(const TargetDistribution& d, const TargetCandidates& c) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.valid[i]) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d.probs.at(a) > d.probs.at(b); });
  idx.resize(std::min(idx.size(), cfg_.num_targets));
  return idx;
}

ad::Tensor Planner::target_points(const TargetDistribution& d, const TargetCandidates& c,
                                  const std::vector<std::size_t>& chosen) const {
  using namespace ad;
  std::vector<double> base;
  for (auto i : chosen) {
    base.push_back(c.anchors[i].x);
    base.push_back(c.anchors[i].y);
  }
  return add(Tensor::from({chosen.size(), 2}, std::move(base)), gather_rows(d.offsets, chosen));
}

ad::Tensor Planner::generate_trajectories(const LatentScene& z, const ad::Tensor& targets) const {
  using namespace ad;
  if (targets.rank() != 2 || targets.cols() != 2) throw ShapeError("generate_trajectories: targets must be M x 2");
  const std::size_t m = targets.rows(), p = cfg_.plan_steps;
  Tensor raw = generator_(z.flattened(), scale(targets, cfg_.coord_scale));

  // Straight-line interpolation toward each target; the network adds a residual.
  std::vector<double> interp(2 * p * 4, 0.0);
  for (std::size_t t = 0; t < p; ++t) {
    const double frac = static_cast<double>(t + 1) / static_cast<double>(p);
    interp[0 * p * 4 + t * 4 + 0] = frac;
    interp[1 * p * 4 + t * 4 + 1] = frac;
  }
  std::vector<double> out_scale(m * p * 4);
  for (std::size_t i = 0; i < out_scale.size(); ++i) out_scale[i] = (i % 4) < 2 ? 1.0 / cfg_.coord_scale : 1.0;
  Tensor base = matmul(targets, Tensor::from({2, p * 4}, std::move(interp)));
  return add(base, mul(raw, Tensor::from({m, p * 4}, std::move(out_scale))));
}

ad::Tensor Planner::trajectory_logits(const LatentScene& z, const ad::Tensor& trajectories) const {
  using namespace ad;
  const std::size_t m = trajectories.rows(), w = cfg_.plan_steps * 4;
  if (trajectories.rank() != 2 || trajectories.cols() != w) throw ShapeError("score_trajectories: trajectory width mismatch");
  std::vector<double> in_scale(m * w);
  for (std::size_t i = 0; i < in_scale.size(); ++i) in_scale[i] = (i % 4) < 2 ? cfg_.coord_scale : 1.0;
  Tensor rows = mul(trajectories, Tensor::from({m, w}, std::move(in_scale)));
  return reshape(g_(z.flattened(), rows), {1, m});
}

ad::Tensor Planner::score_trajectories(const LatentScene& z, const ad::Tensor& trajectories) const {
  return ad::softmax(trajectory_logits(z, trajectories));
}

std::size_t nearest_anchor(const TargetCandidates& c, Point2 p) {
  std::size_t best = c.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c.valid[i]) continue;
    const double d = std::hypot(c.anchors[i].x - p.x, c.anchors[i].y - p.y);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (best == c.size()) throw std::invalid_argument("nearest_anchor: no valid anchor");
  return best;
}

ad::Tensor target_loss(const TargetDistribution& d, const TargetCandidates& c, Point2 gt_endpoint) {
  using namespace ad;
  const std::size_t n = nearest_anchor(c, gt_endpoint);
  std::vector<double> onehot(c.size(), 0.0);
  onehot[n] = 1.0;
  Tensor ce = scale(dot(log_softmax(d.logits), Tensor::from({1, c.size()}, std::move(onehot))), -1.0);
  const std::size_t pick[] = {n};
  Tensor off = gather_rows(d.offsets, pick);
  Tensor want = Tensor::row({gt_endpoint.x - c.anchors[n].x, gt_endpoint.y - c.anchors[n].y});
  return add(ce, sum(smooth_l1(sub(off, want))));
}

ad::Tensor trajectory_loss(const ad::Tensor& trajectory, const ad::Tensor& gt) {
  using namespace ad;
  if (trajectory.shape() != gt.shape()) throw ShapeError("trajectory_loss: shapes differ");
  return scale(sum(smooth_l1(sub(trajectory, gt))), 4.0 / static_cast<double>(gt.numel()));
}

std::vector<double> score_targets_from_distance(const ad::Tensor& trajectories, const ad::Tensor& gt, double alpha) {
  const std::size_t m = trajectories.rows(), w = trajectories.cols();
  if (gt.numel() != w) throw ad::ShapeError("score target: ground truth width mismatch");
  std::vector<double> logits(m);
  for (std::size_t i = 0; i < m; ++i) {
    double worst = 0.0;
    for (std::size_t t = 0; t < w / 4; ++t) {
      const double dx = trajectories.at(i, 4 * t) - gt.values()[4 * t];
      const double dy = trajectories.at(i, 4 * t + 1) - gt.values()[4 * t + 1];
      worst = std::max(worst, std::hypot(dx, dy));
    }
    logits[i] = -alpha * worst;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) total += (l = std::exp(l - top));
  for (auto& l : logits) l /= total;
  return logits;
}

ad::Tensor score_loss(const ad::Tensor& logits, const ad::Tensor& trajectories, const ad::Tensor& gt, double alpha) {
  using namespace ad;
  auto q = score_targets_from_distance(trajectories, gt, alpha);
  const std::size_t m = q.size();
  return scale(dot(log_softmax(logits), Tensor::from({1, m}, std::move(q))), -1.0);
}

ad::Tensor trajectory_row(const ad::Tensor& trajectories, std::size_t m) {
  return ad::reshape(ad::slice_rows(trajectories, m, m + 1), {trajectories.cols() / 4, 4});
}

}  // namespace vrd::planner
