#include "s2fgl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "s2fgl/errors.hpp"
#include "s2fgl/warnings.hpp"

namespace s2fgl {

bool PrototypeRepository::any_present() const {
  for (bool p : present) {
    if (p) return true;
  }
  return false;
}

DenseMatrix PrototypeRepository::present_rows(std::vector<int>* row_map) const {
  int count = 0;
  for (bool p : present) count += p ? 1 : 0;
  DenseMatrix out(count, dim);
  if (row_map) row_map->clear();
  int r = 0;
  for (int i = 0; i < anchors.rows(); ++i) {
    if (!present[static_cast<std::size_t>(i)]) continue;
    for (int j = 0; j < dim; ++j) out(r, j) = anchors(i, j);
    if (row_map) row_map->push_back(i);
    ++r;
  }
  return out;
}

void PrototypeRepository::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "# schema=s2fgl.prototype-repository.v1\n";
  out << num_classes << "," << anchors_per_class << "," << dim << "\n";
  out.precision(17);
  for (int c = 0; c < num_classes; ++c) {
    for (int k = 0; k < anchors_per_class; ++k) {
      const int row = c * anchors_per_class + k;
      out << c << "," << k << "," << (present[static_cast<std::size_t>(row)] ? 1 : 0);
      for (int j = 0; j < dim; ++j) out << "," << anchors(row, j);
      out << "\n";
    }
  }
}

PrototypeRepository PrototypeRepository::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line) || line.rfind("# schema=s2fgl.prototype-repository", 0) != 0) {
    throw ParseError(path + ": missing schema line");
  }
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
  };
  if (!std::getline(in, line)) throw ParseError(path + ": missing header");
  const auto header = split(line);
  if (header.size() != 3) throw ParseError(path + ": bad header");

  PrototypeRepository repo;
  repo.num_classes = std::stoi(header[0]);
  repo.anchors_per_class = std::stoi(header[1]);
  repo.dim = std::stoi(header[2]);
  const int rows = repo.num_classes * repo.anchors_per_class;
  repo.present.assign(static_cast<std::size_t>(rows), false);
  repo.anchors = DenseMatrix(rows, repo.dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split(line);
    if (static_cast<int>(parts.size()) != 3 + repo.dim) throw ParseError(path + ": bad row");
    const int c = std::stoi(parts[0]);
    const int k = std::stoi(parts[1]);
    const int row = c * repo.anchors_per_class + k;
    if (row < 0 || row >= rows) throw ParseError(path + ": row index out of range");
    repo.present[static_cast<std::size_t>(row)] = parts[2] == "1";
    for (int j = 0; j < repo.dim; ++j) {
      repo.anchors(row, j) = std::stod(parts[static_cast<std::size_t>(3 + j)]);
    }
  }
  return repo;
}

LocalPrototypes local_prototypes(const DenseMatrix& hidden, const std::vector<int>& labels,
                                 const std::vector<int>& selected, int num_classes) {
  if (selected.empty()) throw std::invalid_argument("local_prototypes: empty selection");
  LocalPrototypes out;
  out.num_classes = num_classes;
  out.dim = hidden.cols();
  out.present.assign(static_cast<std::size_t>(num_classes), false);
  out.counts.assign(static_cast<std::size_t>(num_classes), 0);
  out.prototypes = DenseMatrix(num_classes, hidden.cols());

  for (int u : selected) {
    if (u < 0 || u >= hidden.rows() || u >= static_cast<int>(labels.size())) {
      throw std::invalid_argument("local_prototypes: node index out of range");
    }
    const int y = labels[static_cast<std::size_t>(u)];
    if (y < 0) continue;  // unlabeled selected nodes do not contribute
    if (y >= num_classes) throw std::invalid_argument("local_prototypes: label out of range");
    for (int j = 0; j < hidden.cols(); ++j) out.prototypes(y, j) += hidden(u, j);
    out.counts[static_cast<std::size_t>(y)] += 1;
  }
  for (int c = 0; c < num_classes; ++c) {
    const int cnt = out.counts[static_cast<std::size_t>(c)];
    if (cnt == 0) continue;
    out.present[static_cast<std::size_t>(c)] = true;
    for (int j = 0; j < hidden.cols(); ++j) out.prototypes(c, j) /= static_cast<double>(cnt);
  }
  return out;
}

PrototypeRepository aggregate_global_repository(const std::vector<LocalPrototypes>& all_locals,
                                                double fraction, Rng& rng,
                                                int anchors_per_class) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("aggregate_global_repository: fraction must be in (0,1]");
  }
  if (all_locals.empty()) {
    throw std::invalid_argument("aggregate_global_repository: no client prototypes");
  }
  const int num_classes = all_locals.front().num_classes;
  const int dim = all_locals.front().dim;

  PrototypeRepository repo;
  repo.num_classes = num_classes;
  repo.anchors_per_class = anchors_per_class;
  repo.dim = dim;
  repo.present.assign(static_cast<std::size_t>(num_classes * anchors_per_class), false);
  repo.anchors = DenseMatrix(num_classes * anchors_per_class, dim);

  for (int c = 0; c < num_classes; ++c) {
    std::vector<int> holders;
    for (int i = 0; i < static_cast<int>(all_locals.size()); ++i) {
      if (all_locals[static_cast<std::size_t>(i)].present[static_cast<std::size_t>(c)]) {
        holders.push_back(i);
      }
    }
    if (holders.empty()) {
      warn("aggregate_global_repository: class " + std::to_string(c) +
           " absent on every client; anchors stay absent");
      continue;
    }
    const int take = static_cast<int>(
        std::ceil(fraction * static_cast<double>(holders.size())));
    for (int k = 0; k < anchors_per_class; ++k) {
      std::vector<int> picked = rng.sample_without_replacement(
          static_cast<int>(holders.size()), take);
      std::sort(picked.begin(), picked.end());  // fixed accumulation order
      const int row = c * anchors_per_class + k;
      double weight_sum = 0.0;
      for (int idx : picked) {
        const auto& lp = all_locals[static_cast<std::size_t>(holders[static_cast<std::size_t>(idx)])];
        const double w = static_cast<double>(lp.counts[static_cast<std::size_t>(c)]);
        for (int j = 0; j < dim; ++j) repo.anchors(row, j) += w * lp.prototypes(c, j);
        weight_sum += w;
      }
      for (int j = 0; j < dim; ++j) repo.anchors(row, j) /= weight_sum;
      repo.present[static_cast<std::size_t>(row)] = true;
    }
  }
  return repo;
}

ad::Value fkd_loss(ad::Tape& tape, ad::Value local_hidden, const DenseMatrix& global_hidden,
                   const PrototypeRepository& repo, const std::vector<int>& nodes,
                   double temperature) {
  if (!repo.any_present()) {
    throw std::invalid_argument(
        "fkd_loss: empty prototype repository; skip the loss until the first broadcast");
  }
  if (nodes.empty()) throw std::invalid_argument("fkd_loss: empty node subset");
  if (!(temperature > 0.0)) throw std::invalid_argument("fkd_loss: temperature must be positive");

  const DenseMatrix anchors = repo.present_rows();

  ad::Value local = local_hidden;
  DenseMatrix global = global_hidden;
  const bool full = static_cast<int>(nodes.size()) == tape.value(local_hidden).rows() &&
                    [&] {
                      for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
                        if (nodes[static_cast<std::size_t>(i)] != i) return false;
                      }
                      return true;
                    }();
  if (!full) {
    local = tape.gather_rows(local_hidden, nodes);
    DenseMatrix sub(static_cast<int>(nodes.size()), global_hidden.cols());
    for (int r = 0; r < sub.rows(); ++r) {
      for (int j = 0; j < sub.cols(); ++j) {
        sub(r, j) = global_hidden(nodes[static_cast<std::size_t>(r)], j);
      }
    }
    global = std::move(sub);
  }

  ad::Value local_sim = tape.cosine_sim_rows(local, anchors);
  if (temperature != 1.0) local_sim = tape.scale(local_sim, 1.0 / temperature);
  const ad::Value p = tape.softmax_rows(local_sim);

  // The global profile is fully frozen: computed on constants only.
  ad::Value global_sim = tape.cosine_sim_rows(tape.constant(global), anchors);
  if (temperature != 1.0) global_sim = tape.scale(global_sim, 1.0 / temperature);
  const ad::Value q = tape.softmax_rows(global_sim);

  return tape.kl_rows(p, q);
}

ad::Value fgma_loss_with_bases(ad::Tape& tape, ad::Value local_hidden,
                               const SpectralBasis& local_basis,
                               const DenseMatrix& global_hidden,
                               const SpectralBasis& global_basis) {
  if (local_basis.low_vecs.size() != global_basis.low_vecs.size() ||
      local_basis.high_vecs.size() != global_basis.high_vecs.size()) {
    throw DimensionError("fgma_loss: basis sizes differ between local and global");
  }
  ad::Value loss = tape.constant(DenseMatrix(1, 1));
  const std::size_t k_eig = local_basis.low_vecs.size();
  for (std::size_t m = 0; m < k_eig; ++m) {
    const ad::Value z_local_low = project(tape, local_hidden, local_basis.low_vecs[m]);
    const ad::Value z_local_high = project(tape, local_hidden, local_basis.high_vecs[m]);
    const ad::Value z_global_low =
        tape.constant(project(global_hidden, global_basis.low_vecs[m]));
    const ad::Value z_global_high =
        tape.constant(project(global_hidden, global_basis.high_vecs[m]));
    loss = tape.add(loss, tape.add(tape.mse(z_local_low, z_global_low),
                                   tape.mse(z_local_high, z_global_high)));
  }
  return loss;
}

ad::Value fgma_loss(ad::Tape& tape, ad::Value local_hidden, const DenseMatrix& global_hidden,
                    int k_sim, int k_eig) {
  const DenseMatrix& local_values = tape.value(local_hidden);
  const int n = local_values.rows();
  if (local_values.rows() != global_hidden.rows()) {
    throw DimensionError("fgma_loss: local and global row counts differ");
  }
  if (n < 2 * k_eig) {
    warn("fgma_loss: client has " + std::to_string(n) + " nodes < 2*k_eig=" +
         std::to_string(2 * k_eig) + "; loss skipped");
    return tape.constant(DenseMatrix(1, 1));
  }
  const int effective_k_sim = std::min(k_sim, n - 1);

  // Similarity graphs are built from detached values; no gradient flows
  // through the graph construction or the eigenvectors.
  const SpectralBasis local_basis =
      extreme_eigenpairs(laplacian(sparse_self_similarity(local_values, effective_k_sim)), k_eig);
  const SpectralBasis global_basis =
      extreme_eigenpairs(laplacian(sparse_self_similarity(global_hidden, effective_k_sim)), k_eig);
  return fgma_loss_with_bases(tape, local_hidden, local_basis, global_hidden, global_basis);
}

ad::Value total_loss(ad::Tape& tape, ad::Value ce, ad::Value fkd, ad::Value fgma,
                     const LossWeights& w) {
  if (!(w.lambda1 >= 0.0) || !(w.lambda2 >= 0.0)) {
    throw std::invalid_argument("total_loss: weights must be nonnegative and finite");
  }
  return tape.add(ce, tape.add(tape.scale(fkd, w.lambda1), tape.scale(fgma, w.lambda2)));
}

}  // namespace s2fgl
