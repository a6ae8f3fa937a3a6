#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "msa/corpus.hpp"
#include "msa/rng.hpp"

namespace msa {

// Seeded multi-source benchmark with a known shift structure: every domain
// draws class-conditional Gaussian representations, rotated per domain in
// the (0,1) plane. The last source sits at a large angle so it is unrelated
// to the target; class variances differ so prediction confidence is
// systematically higher for one class.
struct SyntheticParams {
  std::uint64_t seed = 2026;
  std::size_t dim = 16;
  double class_mean = 1.6;
  // class-conditional spread in the informative (0,1) plane; the compact
  // positive class draws systematically higher classifier confidence
  double sigma_pos = 0.55;
  double sigma_neg = 1.1;
  double sigma_rest = 0.4;  // remaining dimensions, both classes
  std::vector<double> source_angles = {0.0, 0.5, 2.4};  // radians
  double target_angle = 0.25;
  std::size_t labelled_per_source = 600;
  std::size_t unlabelled_per_source = 400;
  std::size_t target_unlabelled = 2500;
  std::size_t target_test = 1000;
  // tail of the target pool drawn at noise_scale times the usual spread:
  // far from the centroid and frequently mislabelled by the voter
  double target_noise_fraction = 0.3;
  double noise_scale = 2.5;

  std::size_t unrelated_source() const { return source_angles.size() - 1; }
};

namespace detail {

inline Instance synthetic_instance(const std::string& id, const DomainId& domain,
                                   Label label, bool keep_label, double angle,
                                   const SyntheticParams& p, Rng& rng,
                                   double sigma_factor = 1.0) {
  const double sigma_plane =
      sigma_factor * (label == Label::positive ? p.sigma_pos : p.sigma_neg);
  const double sigma_rest = sigma_factor * p.sigma_rest;
  const double mean = label == Label::positive ? p.class_mean : -p.class_mean;
  Vec z(p.dim);
  for (std::size_t k = 0; k < p.dim; ++k)
    z[k] = (k < 2 ? sigma_plane : sigma_rest) * rng.gaussian();
  z[0] += mean;
  Instance ins;
  ins.id = id;
  ins.domain = domain;
  ins.repr.resize(p.dim);
  const double c = std::cos(angle), s = std::sin(angle);
  ins.repr = z;
  ins.repr[0] = c * z[0] - s * z[1];
  ins.repr[1] = s * z[0] + c * z[1];
  if (keep_label) ins.label = label;
  return ins;
}

inline std::vector<Instance> synthetic_partition(const DomainId& domain,
                                                 const std::string& partition,
                                                 std::size_t count, bool keep_label,
                                                 double angle, const SyntheticParams& p,
                                                 const Rng& root,
                                                 double noise_fraction = 0.0) {
  Rng rng = root.substream("synthetic/" + domain + "/" + partition);
  std::vector<Instance> out;
  out.reserve(count);
  const std::size_t clean = count - static_cast<std::size_t>(noise_fraction * count);
  for (std::size_t i = 0; i < count; ++i) {
    const Label label = i % 2 == 0 ? Label::positive : Label::negative;
    const double sigma_factor = i < clean ? 1.0 : p.noise_scale;
    out.push_back(synthetic_instance(domain + "-" + partition + "-" + std::to_string(i),
                                     domain, label, keep_label, angle, p, rng,
                                     sigma_factor));
  }
  return out;
}

}  // namespace detail

inline Corpus make_synthetic_corpus(const SyntheticParams& p = {}) {
  Rng root(p.seed);
  Corpus corpus;
  corpus.meta.name = "synthetic";
  corpus.meta.representation = "precomputed";
  corpus.meta.dim = p.dim;
  for (std::size_t i = 0; i < p.source_angles.size(); ++i) {
    DomainSet s;
    s.domain = "S" + std::to_string(i);
    s.labelled = detail::synthetic_partition(s.domain, "labelled", p.labelled_per_source,
                                             true, p.source_angles[i], p, root);
    s.unlabelled = detail::synthetic_partition(s.domain, "unlabelled",
                                               p.unlabelled_per_source, false,
                                               p.source_angles[i], p, root);
    corpus.sources.push_back(std::move(s));
  }
  corpus.target.domain = "T";
  corpus.target.unlabelled =
      detail::synthetic_partition("T", "unlabelled", p.target_unlabelled, false,
                                  p.target_angle, p, root, p.target_noise_fraction);
  corpus.target.test = detail::synthetic_partition("T", "test", p.target_test, true,
                                                   p.target_angle, p, root);
  validate(corpus);
  return corpus;
}

}  // namespace msa
