#include "mdcontour/projection.hpp"

#include "mdcontour/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace mdcontour {

Box padded_bounds(std::span<const Vec2> points, double margin)
{
    Box box;
    if (points.empty()) {
        box.min = {-0.5, -0.5};
        box.max = {0.5, 0.5};
        return box;
    }
    box.min = box.max = points.front();
    for (const Vec2& p : points) {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
    }
    double extent = std::max(box.width(), box.height());
    if (!(extent > 0.0)) {
        extent = 1.0;
        box.min -= Vec2{0.5, 0.5};
        box.max += Vec2{0.5, 0.5};
    }
    const Vec2 pad{margin * extent, margin * extent};
    box.min -= pad;
    box.max += pad;
    return box;
}

Vec2 ProjectionModel::project(std::span<const double> row) const
{
    Vec2 out;
    for (std::size_t j = 0; j < mean.size(); ++j) {
        const double c = row[j] - mean[j];
        out.x += c * axes[0][j];
        out.y += c * axes[1][j];
    }
    return out;
}

Projection pca_project(const Dataset& ds)
{
    const auto n = static_cast<Eigen::Index>(ds.row_count());
    const auto d = static_cast<Eigen::Index>(ds.column_count());
    if (d < 2)
        throw Error(ErrorCode::InsufficientDimensions, "PCA to 2D needs at least 2 columns");

    Eigen::MatrixXd data(n, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            data(i, j) = ds.column(static_cast<std::size_t>(j)).values[static_cast<std::size_t>(i)];

    const Eigen::RowVectorXd mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.adjoint() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::VarianceZero, "covariance eigen-decomposition failed");

    // Eigen returns ascending eigenvalues.
    const Eigen::VectorXd& evals = solver.eigenvalues();
    const double top = evals(d - 1);
    const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
    if (!(top > 1e-12 * scale))
        throw Error(ErrorCode::VarianceZero, "all columns are constant; nothing to project");

    Projection result;
    ProjectionModel& model = result.model;
    model.mean.assign(mean.data(), mean.data() + d);
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - k);
        axis.normalize();
        Eigen::Index arg = 0;
        for (Eigen::Index j = 1; j < d; ++j)
            if (std::abs(axis(j)) > std::abs(axis(arg)) + 1e-12)
                arg = j;
        if (axis(arg) < 0.0)
            axis = -axis;
        model.axes[static_cast<std::size_t>(k)].assign(axis.data(), axis.data() + d);
        model.eigenvalues[static_cast<std::size_t>(k)] = std::max(0.0, evals(d - 1 - k));
    }

    result.cloud.positions.reserve(static_cast<std::size_t>(n));
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j)
            row[static_cast<std::size_t>(j)] = data(i, j);
        result.cloud.positions.push_back(model.project(row));
    }
    result.cloud.viewport = padded_bounds(result.cloud.positions);
    return result;
}

} // namespace mdcontour
