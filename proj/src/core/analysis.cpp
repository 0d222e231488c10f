#include "core/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <map>

#include "core/errors.hpp"

using json = nlohmann::json;

namespace uclearn {

namespace {

// Mean pairwise Euclidean distance after row normalization, via the Gram
// matrix in row blocks.
double mean_pairwise_unit_distance(const Eigen::MatrixXd& rows) {
    const Eigen::Index k = rows.rows();
    if (k < 2) return 0.0;
    Eigen::MatrixXd unit = rows;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double n = unit.row(i).norm();
        if (n > 0.0) unit.row(i) /= n;
    }
    const Eigen::Index block = 512;
    double total = 0.0;
    for (Eigen::Index start = 0; start < k; start += block) {
        const Eigen::Index count = std::min(block, k - start);
        const Eigen::MatrixXd gram = unit.middleRows(start, count) * unit.transpose();
        for (Eigen::Index bi = 0; bi < count; ++bi) {
            const Eigen::Index i = start + bi;
            for (Eigen::Index j = i + 1; j < k; ++j) {
                const double d2 = std::max(0.0, 2.0 - 2.0 * gram(bi, j));
                total += std::sqrt(d2);
            }
        }
    }
    const double pairs = double(k) * double(k - 1) / 2.0;
    return total / pairs;
}

double covariance_trace(const Eigen::MatrixXd& rows) {
    const Eigen::Index k = rows.rows();
    if (k < 2) return 0.0;
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - mean;
    return centered.squaredNorm() / double(k - 1);
}

} // namespace

std::string Pca3Result::to_csv(const std::vector<std::string>& ids,
                               const std::vector<int>& labels) const {
    std::string out = "id,label,c1,c2,c3\n";
    char line[256];
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        const double c1 = components > 0 ? coords(i, 0) : 0.0;
        const double c2 = components > 1 ? coords(i, 1) : 0.0;
        const double c3 = components > 2 ? coords(i, 2) : 0.0;
        std::snprintf(line, sizeof(line), "%s,%d,%.8g,%.8g,%.8g\n", ids[i].c_str(), labels[i], c1,
                      c2, c3);
        out += line;
    }
    return out;
}

Pca3Result pca3_project(const EmbeddingMatrix& embeddings) {
    const int k = embeddings.count();
    const int d = embeddings.dim();
    if (k < 4) throw_param("pca3_project: need at least 4 rows");
    if (d < 3) throw_param("pca3_project: need at least 3 dimensions");

    Eigen::MatrixXd rows = embeddings.rows.cast<double>();
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    rows.rowwise() -= mean;

    const Eigen::MatrixXd cov = rows.transpose() * rows / double(k - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw_numeric("pca3_project: eigendecomposition failed");

    // SelfAdjointEigenSolver sorts ascending; take the top three.
    const Eigen::VectorXd evals = solver.eigenvalues();
    const Eigen::MatrixXd evecs = solver.eigenvectors();
    const double total_var = std::max(evals.sum(), 0.0);
    const double rank_tol = std::max(1e-12, 1e-9 * std::abs(evals(d - 1)));

    Pca3Result result;
    std::vector<int> keep;
    for (int c = 0; c < 3 && c < d; ++c) {
        const int idx = d - 1 - c;
        if (evals(idx) <= rank_tol) break;
        keep.push_back(idx);
    }
    result.components = int(keep.size());
    result.rank_deficient = result.components < 3;

    Eigen::MatrixXd basis(d, result.components);
    for (int c = 0; c < result.components; ++c) {
        Eigen::VectorXd v = evecs.col(keep[c]);
        // Sign convention: first nonzero loading positive.
        for (int j = 0; j < d; ++j) {
            if (v(j) != 0.0) {
                if (v(j) < 0.0) v = -v;
                break;
            }
        }
        basis.col(c) = v;
        result.explained_variance.push_back(total_var > 0.0 ? evals(keep[c]) / total_var : 0.0);
    }
    result.coords = (rows * basis).cast<float>();
    return result;
}

json GeometryReport::to_json() const {
    json cats = json::array();
    for (const auto& c : per_category) {
        cats.push_back({{"category", c.category},
                        {"discrepancy_clean", c.discrepancy_clean},
                        {"discrepancy_perturbed", c.discrepancy_perturbed},
                        {"excluded", c.excluded}});
    }
    return json{{"discrepancy_clean", discrepancy_clean},
                {"discrepancy_perturbed", discrepancy_perturbed},
                {"discrepancy_ratio", discrepancy_ratio},
                {"uniformity_clean", uniformity_clean},
                {"uniformity_perturbed", uniformity_perturbed},
                {"uniformity_ratio", uniformity_ratio},
                {"mean_shift", mean_shift},
                {"per_category", cats}};
}

GeometryReport geometry_report(const EmbeddingMatrix& clean, const EmbeddingMatrix& perturbed,
                               const std::vector<int>& labels) {
    if (clean.count() != perturbed.count() || clean.dim() != perturbed.dim()) {
        throw_param("geometry_report: embedding shapes disagree");
    }
    if (int(labels.size()) != clean.count()) throw_param("geometry_report: label count mismatch");
    for (int i = 0; i < clean.count(); ++i) {
        if (clean.ids[i] != perturbed.ids[i]) throw_param("geometry_report: ids not aligned");
    }

    const Eigen::MatrixXd rows_clean = clean.rows.cast<double>();
    const Eigen::MatrixXd rows_pert = perturbed.rows.cast<double>();

    std::map<int, std::vector<int>> by_category;
    for (int i = 0; i < clean.count(); ++i) by_category[labels[i]].push_back(i);

    GeometryReport report;
    double disc_clean_sum = 0.0, disc_pert_sum = 0.0;
    int included = 0;
    for (const auto& [cat, idx] : by_category) {
        CategoryGeometry cg;
        cg.category = cat;
        if (idx.size() < 2) {
            cg.excluded = true;
            report.per_category.push_back(cg);
            continue;
        }
        Eigen::MatrixXd sub_clean(idx.size(), clean.dim());
        Eigen::MatrixXd sub_pert(idx.size(), clean.dim());
        for (std::size_t j = 0; j < idx.size(); ++j) {
            sub_clean.row(j) = rows_clean.row(idx[j]);
            sub_pert.row(j) = rows_pert.row(idx[j]);
        }
        cg.discrepancy_clean = covariance_trace(sub_clean);
        cg.discrepancy_perturbed = covariance_trace(sub_pert);
        disc_clean_sum += cg.discrepancy_clean;
        disc_pert_sum += cg.discrepancy_perturbed;
        ++included;
        report.per_category.push_back(cg);
    }
    if (included > 0) {
        report.discrepancy_clean = disc_clean_sum / included;
        report.discrepancy_perturbed = disc_pert_sum / included;
    }
    report.discrepancy_ratio =
        report.discrepancy_clean > 0.0 ? report.discrepancy_perturbed / report.discrepancy_clean : 0.0;

    report.uniformity_clean = mean_pairwise_unit_distance(rows_clean);
    report.uniformity_perturbed = mean_pairwise_unit_distance(rows_pert);
    report.uniformity_ratio =
        report.uniformity_clean > 0.0 ? report.uniformity_perturbed / report.uniformity_clean : 0.0;

    report.mean_shift =
        (rows_clean.colwise().mean() - rows_pert.colwise().mean()).norm();
    return report;
}

} // namespace uclearn
