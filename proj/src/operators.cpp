#include "evspde/operators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "evspde/csv.hpp"

namespace evspde::operators {

NonlinearitySpec NonlinearitySpec::linear(double gamma)
{
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("NonlinearitySpec: linear gamma must be > 0");
    }
    return {Kind::Linear, gamma};
}

NonlinearitySpec NonlinearitySpec::tanh(double gamma)
{
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("NonlinearitySpec: tanh gamma must be > 0");
    }
    return {Kind::Tanh, gamma};
}

double NonlinearitySpec::operator()(double s) const noexcept
{
    switch (kind) {
    case Kind::Zero:
        return 0.0;
    case Kind::Linear:
        return gamma * s;
    case Kind::Tanh:
        return gamma * std::tanh(s);
    }
    return 0.0;
}

std::string NonlinearitySpec::describe() const
{
    switch (kind) {
    case Kind::Zero:
        return "none";
    case Kind::Linear:
        return "linear(" + format_double(gamma) + ")";
    case Kind::Tanh:
        return "tanh(" + format_double(gamma) + ")";
    }
    return "?";
}

Vec apply_nonlinearity(const NonlinearitySpec& nl, const FourierBasis& basis, const Vec& coeffs)
{
    if (nl.is_zero()) {
        return Vec::Zero(coeffs.size());
    }
    if (nl.kind == NonlinearitySpec::Kind::Linear) {
        return nl.gamma * coeffs; // the span is invariant, skip the round trip
    }
    return basis.project(basis.to_grid(coeffs).unaryExpr([&](double s) { return nl(s); }));
}

// ---------------------------------------------------------------------------

GalerkinOperator::GalerkinOperator(std::string name, double t, std::shared_ptr<const FourierBasis> basis,
                                   Vec density)
    : name_(std::move(name))
    , t_(t)
    , basis_(std::move(basis))
    , density_(std::move(density))
{
    const double rho0 = basis_->density();
    const double lo = density_.minCoeff();
    const double hi = density_.maxCoeff();
    if (!(lo > 0.0)) {
        throw std::invalid_argument("GalerkinOperator: pairing density must be positive");
    }
    if (hi - lo <= 1e-15 * hi) {
        gram_scale_ = hi / rho0;
        gram_ = Mat::Identity(basis_->size(), basis_->size()) * *gram_scale_;
    } else {
        const Mat& phi = basis_->values();
        gram_ = phi.transpose() * (density_ * basis_->weight()).asDiagonal() * phi;
        gram_solver_.compute(gram_);
    }
}

GalerkinOperator GalerkinOperator::make_diagonal(std::string name, double t, std::shared_ptr<const FourierBasis> basis,
                                                 Vec diagonal, WeakForm weak_form)
{
    Vec density = Vec::Constant(basis->grid_size(), basis->density());
    GalerkinOperator op(std::move(name), t, std::move(basis), std::move(density));
    op.pairing_matrix_ = diagonal.asDiagonal();
    op.action_matrix_ = op.pairing_matrix_;
    op.diagonal_ = std::move(diagonal);
    op.weak_form_ = std::move(weak_form);
    return op;
}

GalerkinOperator GalerkinOperator::make_dense(std::string name, double t, std::shared_ptr<const FourierBasis> basis,
                                              Vec pairing_density, Mat pairing_matrix, WeakForm weak_form)
{
    GalerkinOperator op(std::move(name), t, std::move(basis), std::move(pairing_density));
    op.action_matrix_ = op.solve_gram(pairing_matrix);
    op.pairing_matrix_ = std::move(pairing_matrix);
    op.weak_form_ = std::move(weak_form);
    return op;
}

GalerkinOperator GalerkinOperator::make_nonlinear(std::string name, double t,
                                                  std::shared_ptr<const FourierBasis> basis, Vec pairing_density,
                                                  Residual residual, WeakForm weak_form,
                                                  Linearization linearization)
{
    GalerkinOperator op(std::move(name), t, std::move(basis), std::move(pairing_density));
    op.residual_fn_ = std::move(residual);
    op.weak_form_ = std::move(weak_form);
    op.linearization_ = std::move(linearization);
    return op;
}

Vec GalerkinOperator::solve_gram(const Vec& r) const
{
    return gram_scale_ ? Vec(r / *gram_scale_) : Vec(gram_solver_.solve(r));
}

Mat GalerkinOperator::solve_gram(const Mat& r) const
{
    return gram_scale_ ? Mat(r / *gram_scale_) : Mat(gram_solver_.solve(r));
}

Vec GalerkinOperator::restrict_input(const Vec& u) const
{
    if (u.size() != size()) {
        throw std::invalid_argument("GalerkinOperator " + name_ + ": expected " + std::to_string(size())
                                    + " coefficients, got " + std::to_string(u.size()));
    }
    if (!mean_zero_) {
        return u;
    }
    Vec r = u;
    r(0) = 0.0;
    return r;
}

Vec GalerkinOperator::apply(const Vec& u) const
{
    const Vec ur = restrict_input(u);
    Vec out;
    if (diagonal_) {
        out = diagonal_->cwiseProduct(ur);
    } else if (is_linear()) {
        out = action_matrix_ * ur;
    } else {
        out = solve_gram(residual_fn_(ur));
    }
    if (mean_zero_) {
        out(0) = 0.0;
    }
    return out;
}

Vec GalerkinOperator::residual(const Vec& u) const
{
    const Vec ur = restrict_input(u);
    Vec out = is_linear() ? Vec(pairing_matrix_ * ur) : residual_fn_(ur);
    if (mean_zero_) {
        out(0) = 0.0;
    }
    return out;
}

double GalerkinOperator::pairing(const Vec& u, const Vec& v) const { return weak_form_(u, v); }

double GalerkinOperator::pairing_via_action(const Vec& u, const Vec& v) const
{
    return v.dot(gram_ * apply(u));
}

Mat GalerkinOperator::matrix() const
{
    if (!is_linear()) {
        throw std::logic_error("GalerkinOperator " + name_ + " is nonlinear; use linearized_at");
    }
    return action_matrix_;
}

Mat GalerkinOperator::pairing_matrix() const
{
    if (!is_linear()) {
        throw std::logic_error("GalerkinOperator " + name_ + " is nonlinear");
    }
    return pairing_matrix_;
}

Mat GalerkinOperator::linearized_at(const Vec& u) const
{
    if (is_linear()) {
        return action_matrix_;
    }
    return solve_gram(linearization_(restrict_input(u)));
}

double GalerkinOperator::v_norm(const Vec& u) const
{
    if (v_norm_) {
        return v_norm_(u);
    }
    const Vec lambda = basis_->eigenvalues();
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        s += (1.0 + lambda(i)) * u(i) * u(i);
    }
    return std::sqrt(s);
}

GalerkinOperator::LineFunctional GalerkinOperator::line_pairing(const Vec& u, const Vec& v, const Vec& x) const
{
    if (line_factory_) {
        return line_factory_(u, v, x);
    }
    return [self = *this, u, v, x](double lambda) { return x.dot(self.residual(u + lambda * v)); };
}

GalerkinOperator GalerkinOperator::minus_nonlinearity(const NonlinearitySpec& nl) const
{
    if (nl.is_zero()) {
        return *this;
    }
    const GalerkinOperator self = *this;
    auto basis = basis_;
    const Vec w_rho = density_ * basis_->weight();
    auto phi_grid = [basis, nl](const Vec& u) {
        return Vec(basis->to_grid(u).unaryExpr([&](double s) { return nl(s); }));
    };
    Residual residual = [self, basis, w_rho, phi_grid](const Vec& u) {
        return Vec(self.residual(u) - basis->values().transpose() * phi_grid(u).cwiseProduct(w_rho));
    };
    WeakForm weak = [self, basis, w_rho, phi_grid](const Vec& u, const Vec& v) {
        return self.pairing(u, v) - phi_grid(u).cwiseProduct(w_rho).dot(basis->to_grid(v));
    };
    Linearization lin = [self](const Vec& u) { return Mat(self.gram() * self.linearized_at(u)); };
    GalerkinOperator op = make_nonlinear(name_ + "-" + nl.describe(), t_, basis_, density_, std::move(residual),
                                         std::move(weak), std::move(lin));
    op.v_norm_ = v_norm_;
    op.mean_zero_ = mean_zero_;
    return op;
}

// ---------------------------------------------------------------------------

namespace {

// -Σ w [κ u'v' + β u'v + μ uv] on grid arrays.
double weak_integral(const FourierBasis& basis, const Vec& kappa, const Vec& beta, const Vec& mu, const Vec& u,
                     const Vec& v)
{
    const Vec ug = basis.to_grid(u);
    const Vec vg = basis.to_grid(v);
    const Vec du = basis.derivative_on_grid(u);
    const Vec dv = basis.derivative_on_grid(v);
    double s = 0.0;
    for (int m = 0; m < basis.grid_size(); ++m) {
        s += kappa(m) * du(m) * dv(m) + beta(m) * du(m) * vg(m) + mu(m) * ug(m) * vg(m);
    }
    return -s * basis.weight();
}

// S_ij = weak_integral(φ_j, φ_i).
Mat weak_matrix(const FourierBasis& basis, const Vec& kappa, const Vec& beta, const Vec& mu)
{
    const Mat& phi = basis.values();
    const Mat& dphi = basis.derivatives();
    const double w = basis.weight();
    Mat s = dphi.transpose() * (kappa * w).asDiagonal() * dphi + phi.transpose() * (mu * w).asDiagonal() * phi;
    if (beta.cwiseAbs().maxCoeff() > 0.0) {
        s += phi.transpose() * (beta * w).asDiagonal() * dphi;
    }
    return -s;
}

Vec grid_nodes(const FourierBasis& basis)
{
    Vec theta(basis.grid_size());
    for (int m = 0; m < basis.grid_size(); ++m) {
        theta(m) = basis.node(m);
    }
    return theta;
}

} // namespace

GalerkinOperator assemble_mcf_sphere(std::shared_ptr<const FourierBasis> basis, int n, double t)
{
    if (!basis) {
        throw std::invalid_argument("assemble_mcf_sphere: null basis");
    }
    if (n < 2) {
        throw std::invalid_argument("assemble_mcf_sphere: n must be >= 2");
    }
    if (std::abs(basis->metric() - 1.0) > 1e-14) {
        throw std::invalid_argument("assemble_mcf_sphere: requires the unit reference circle (g0 = 1)");
    }
    if (t < 0.0 || t >= 1.0 / (2.0 * n)) {
        throw std::domain_error("assemble_mcf_sphere: t must lie in [0, 1/(2n))");
    }
    const double scale = 1.0 - 2.0 * n * t;
    const double n2 = static_cast<double>(n) * n;
    const Vec d = (n2 - basis->eigenvalues().array()) / scale;

    const int grid = basis->grid_size();
    const Vec kappa = Vec::Constant(grid, basis->density() / scale);
    const Vec beta = Vec::Zero(grid);
    const Vec mu = Vec::Constant(grid, -n2 * basis->density() / scale);
    auto b = basis;
    auto weak = [b, kappa, beta, mu](const Vec& u, const Vec& v) { return weak_integral(*b, kappa, beta, mu, u, v); };
    return GalerkinOperator::make_diagonal("mcf_sphere(n=" + std::to_string(n) + ")", t, std::move(basis), d,
                                           std::move(weak));
}

GalerkinOperator assemble_laplace_beltrami(std::shared_ptr<const FourierBasis> basis)
{
    if (!basis) {
        throw std::invalid_argument("assemble_laplace_beltrami: null basis");
    }
    const Vec d = -basis->eigenvalues();
    const int grid = basis->grid_size();
    const Vec kappa = Vec::Constant(grid, basis->density() / basis->metric());
    const Vec zero = Vec::Zero(grid);
    auto b = basis;
    auto weak = [b, kappa, zero](const Vec& u, const Vec& v) { return weak_integral(*b, kappa, zero, zero, u, v); };
    return GalerkinOperator::make_diagonal("laplace_beltrami", 0.0, std::move(basis), d, std::move(weak));
}

NormalVelocityTerm NormalVelocityTerm::constant(double vh)
{
    if (!std::isfinite(vh)) {
        throw std::invalid_argument("NormalVelocityTerm: VH must be finite");
    }
    return {[vh](double, double) { return vh; }, std::abs(vh), "constant(" + format_double(vh) + ")"};
}

NormalVelocityTerm NormalVelocityTerm::mcf(int n, double horizon)
{
    if (n < 2) {
        throw std::invalid_argument("NormalVelocityTerm: n must be >= 2");
    }
    if (!(horizon >= 0.0) || horizon >= 1.0 / (2.0 * n)) {
        throw std::invalid_argument("NormalVelocityTerm: MCF horizon must satisfy T < 1/(2n)");
    }
    const double n2 = static_cast<double>(n) * n;
    return {[n, n2](double, double t) { return -n2 / (1.0 - 2.0 * n * t); }, n2 / (1.0 - 2.0 * n * horizon),
            "mcf(n=" + std::to_string(n) + ")"};
}

GalerkinOperator assemble_moving_surface(const geometry::MetricFamily& family, const NormalVelocityTerm& vh,
                                         double t)
{
    const double T = family.horizon();
    if (t < -1e-12 * std::max(1.0, T) || t > T * (1.0 + 1e-12)) {
        throw std::out_of_range("assemble_moving_surface: t outside [0, T]");
    }
    auto basis = family.basis_ptr();
    const Vec rho = family.sqrt_det_on_grid(t);
    const Vec ginv = family.inverse_metric_on_grid(t);
    const Vec theta = grid_nodes(*basis);
    Vec vh_grid(basis->grid_size());
    for (int m = 0; m < basis->grid_size(); ++m) {
        vh_grid(m) = vh.value(theta(m), t);
        if (std::abs(vh_grid(m)) > vh.k1 * (1.0 + 1e-12)) {
            throw std::invalid_argument("assemble_moving_surface: |VH| exceeds the declared bound k1 = "
                                        + format_double(vh.k1));
        }
    }
    const Vec kappa = ginv.cwiseProduct(rho);
    const Vec beta = Vec::Zero(basis->grid_size());
    const Vec mu = vh_grid.cwiseProduct(rho);
    Mat s = weak_matrix(*basis, kappa, beta, mu);
    auto weak = [basis, kappa, beta, mu](const Vec& u, const Vec& v) {
        return weak_integral(*basis, kappa, beta, mu, u, v);
    };
    return GalerkinOperator::make_dense("moving_surface(" + vh.label + ")", t, basis, rho, std::move(s),
                                        std::move(weak));
}

// ---------------------------------------------------------------------------

double CoefficientField::value(double theta) const noexcept
{
    return mean + cos1 * std::cos(theta) + sin1 * std::sin(theta);
}

double CoefficientField::derivative(double theta) const noexcept
{
    return -cos1 * std::sin(theta) + sin1 * std::cos(theta);
}

std::string CoefficientField::describe() const
{
    return format_double(mean) + "+" + format_double(cos1) + "cos+" + format_double(sin1) + "sin";
}

ParabolicCoefficients::Bounds ParabolicCoefficients::validate(const FourierBasis& basis) const
{
    Bounds bd{INFINITY, -INFINITY, 0.0, 0.0, -INFINITY};
    for (int m = 0; m < basis.grid_size(); ++m) {
        const double th = basis.node(m);
        const double av = a.value(th);
        bd.a_lower = std::min(bd.a_lower, av);
        bd.a_upper = std::max(bd.a_upper, av);
        // |b|_g with the reference metric
        bd.b_sup = std::max(bd.b_sup, std::sqrt(basis.metric()) * std::abs(b.value(th)));
        bd.c_sup = std::max(bd.c_sup, std::abs(ctilde.value(th)));
        // isotropic density is spatially constant, so div b = ∂_θ b^θ
        bd.max_div_b = std::max(bd.max_div_b, b.derivative(th));
    }
    if (!(bd.a_lower > 0.0)) {
        throw std::invalid_argument("ParabolicCoefficients: diffusion coefficient a must be bounded below by a "
                                    "positive constant (min a = " + format_double(bd.a_lower) + ")");
    }
    if (bd.max_div_b > 1e-12) {
        throw std::invalid_argument("ParabolicCoefficients: div(b) must be <= 0 at every node (max div b = "
                                    + format_double(bd.max_div_b) + ")");
    }
    return bd;
}

std::string ParabolicCoefficients::describe() const
{
    return "a=" + a.describe() + ";b=" + b.describe() + ";c=" + ctilde.describe();
}

GalerkinOperator assemble_general_parabolic(const ParabolicCoefficients& coef, const geometry::PullbackMap& map,
                                            double t)
{
    const auto& family = map.family();
    auto basis = family.basis_ptr();
    coef.validate(*basis);
    // F_t is the identity on coefficients; the push also checks t ∈ [0, T].
    map.push(Vec::Zero(basis->size()), t);
    const Vec ginv = family.inverse_metric_on_grid(t);
    const double rho0 = basis->density();
    const int grid = basis->grid_size();
    Vec kappa(grid), beta(grid), mu(grid);
    for (int m = 0; m < grid; ++m) {
        const double th = basis->node(m);
        kappa(m) = coef.a.value(th) * ginv(m) * rho0;
        beta(m) = coef.b.value(th) * rho0;
        mu(m) = coef.ctilde.value(th) * rho0;
    }
    Mat s = weak_matrix(*basis, kappa, beta, mu);
    auto weak = [basis, kappa, beta, mu](const Vec& u, const Vec& v) {
        return weak_integral(*basis, kappa, beta, mu, u, v);
    };
    return GalerkinOperator::make_dense("general_parabolic(" + coef.describe() + ")", t, basis,
                                        Vec::Constant(grid, rho0), std::move(s), std::move(weak));
}

// ---------------------------------------------------------------------------

namespace {

void check_p(double p)
{
    if (!(p > 2.0) || !std::isfinite(p)) {
        throw std::invalid_argument("p-Laplace: exponent p must be > 2");
    }
}

void check_mean_zero(const Vec& u, const char* which)
{
    if (std::abs(u(0)) > 1e-12 * std::max(1.0, u.norm())) {
        throw std::invalid_argument(std::string("p-Laplace: ") + which
                                    + " must be mean-zero (constant coefficient " + format_double(u(0)) + ")");
    }
}

// s^e, with a multiplication loop for small integer e (p = 4, 6, ...)
double power(double s, double e)
{
    if (e == std::floor(e) && e >= 0.0 && e <= 8.0) {
        double r = 1.0;
        for (int k = 0; k < static_cast<int>(e); ++k) {
            r *= s;
        }
        return r;
    }
    return std::pow(s, e);
}

// w ρ |∇u|^{p-2} g^θθ on the grid.
Vec p_laplace_weight(const FourierBasis& basis, const Vec& du, const Vec& rho, const Vec& ginv, double p)
{
    Vec out(du.size());
    const double e = 0.5 * (p - 2.0);
    for (int m = 0; m < du.size(); ++m) {
        const double grad_sq = ginv(m) * du(m) * du(m);
        out(m) = basis.weight() * rho(m) * power(grad_sq, e) * ginv(m);
    }
    return out;
}

} // namespace

double p_laplace_pairing(const Vec& u, const Vec& v, double p, const geometry::MetricFamily& family, double t)
{
    check_p(p);
    check_mean_zero(u, "u");
    check_mean_zero(v, "v");
    const auto& basis = family.basis();
    const Vec du = basis.derivative_on_grid(u);
    const Vec dv = basis.derivative_on_grid(v);
    const Vec w = p_laplace_weight(basis, du, family.sqrt_det_on_grid(t), family.inverse_metric_on_grid(t), p);
    return -w.cwiseProduct(du).dot(dv);
}

double w1p_norm(const Vec& u, double p, const geometry::MetricFamily& family, double t)
{
    const auto& basis = family.basis();
    const Vec ug = basis.to_grid(u);
    const Vec du = basis.derivative_on_grid(u);
    const Vec rho = family.sqrt_det_on_grid(t);
    const Vec ginv = family.inverse_metric_on_grid(t);
    double s = 0.0;
    for (int m = 0; m < ug.size(); ++m) {
        const double grad = std::sqrt(ginv(m)) * std::abs(du(m));
        s += rho(m) * (power(std::abs(ug(m)), p) + power(grad, p));
    }
    return std::pow(s * basis.weight(), 1.0 / p);
}

GalerkinOperator assemble_p_laplace(const geometry::MetricFamily& family, double p, double t)
{
    check_p(p);
    auto basis = family.basis_ptr();
    const Vec rho = family.sqrt_det_on_grid(t);
    const Vec ginv = family.inverse_metric_on_grid(t);

    auto residual = [basis, rho, ginv, p](const Vec& u) {
        const Vec du = basis->derivative_on_grid(u);
        const Vec w = p_laplace_weight(*basis, du, rho, ginv, p);
        Vec r = -(basis->derivatives().transpose() * w.cwiseProduct(du));
        r(0) = 0.0;
        return r;
    };
    // the operator may outlive the caller's family
    auto fam = std::make_shared<const geometry::MetricFamily>(family);
    auto weak = [fam, p, t](const Vec& u, const Vec& v) { return p_laplace_pairing(u, v, p, *fam, t); };
    auto linearization = [basis, rho, ginv, p](const Vec& u) {
        const Vec du = basis->derivative_on_grid(u);
        const Vec w = p_laplace_weight(*basis, du, rho, ginv, p);
        Mat s = -(basis->derivatives().transpose() * w.asDiagonal() * basis->derivatives());
        s.row(0).setZero();
        s.col(0).setZero();
        return s;
    };
    GalerkinOperator op = GalerkinOperator::make_nonlinear("p_laplace(p=" + format_double(p) + ")", t, basis, rho,
                                                           std::move(residual), std::move(weak),
                                                           std::move(linearization));
    op.set_mean_zero(true);
    op.set_line_factory([basis, rho, ginv, p](const Vec& u, const Vec& v, const Vec& x) -> GalerkinOperator::LineFunctional {
        Vec uu = u, vv = v, xx = x;
        uu(0) = vv(0) = xx(0) = 0.0;
        const Vec du = basis->derivative_on_grid(uu);
        const Vec dv = basis->derivative_on_grid(vv);
        const Vec dx = basis->derivative_on_grid(xx);
        const Vec c = basis->weight() * rho.cwiseProduct(ginv);
        const double e = 0.5 * (p - 2.0);
        return [du, dv, dx, c, ginv, e](double lambda) {
            double s = 0.0;
            for (int m = 0; m < du.size(); ++m) {
                const double d = du(m) + lambda * dv(m);
                s += c(m) * power(ginv(m) * d * d, e) * d * dx(m);
            }
            return -s;
        };
    });
    op.set_v_norm([fam, p, t](const Vec& u) { return w1p_norm(u, p, *fam, t); });
    return op;
}

std::string pairing_matrix_csv(const Mat& m)
{
    CsvBuilder csv({"row", "col", "value"});
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            csv.cell(i).cell(j).cell(m(i, j)).end_row();
        }
    }
    return csv.str();
}

} // namespace evspde::operators
