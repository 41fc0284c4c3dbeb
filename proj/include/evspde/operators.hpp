#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "evspde/basis.hpp"
#include "evspde/geometry.hpp"

namespace evspde::operators {

/// Pointwise (Nemytskii) nonlinearity φ with φ(0) = 0, monotone, Lipschitz.
struct NonlinearitySpec {
    enum class Kind { Zero, Linear, Tanh };
    Kind kind = Kind::Zero;
    double gamma = 0.0;

    static NonlinearitySpec zero() { return {}; }
    static NonlinearitySpec linear(double gamma);
    static NonlinearitySpec tanh(double gamma);

    double operator()(double s) const noexcept;
    double lipschitz() const noexcept { return kind == Kind::Zero ? 0.0 : gamma; }
    bool monotone() const noexcept { return true; }
    bool is_zero() const noexcept { return kind == Kind::Zero; }
    std::string describe() const;
};

/// Galerkin projection (in H₀) of φ applied to the grid values of u.
Vec apply_nonlinearity(const NonlinearitySpec& nl, const FourierBasis& basis, const Vec& coeffs);

/// Discretized drift A(t) on the Galerkin space.
///
/// Every operator is paired in a measure ρ_pair dθ (ρ₀ for H₀-paired
/// operators, √|g_t| for the moving-surface operator). `pairing` evaluates the
/// weak form directly on grid values; `residual` returns r_i = ⟨A u, φ_i⟩;
/// `apply` returns the Riesz representative G⁻¹ r with G the Gram matrix of
/// the pairing measure (G = I for H₀-paired operators).
class GalerkinOperator {
public:
    using WeakForm = std::function<double(const Vec& u, const Vec& v)>;
    using Residual = std::function<Vec(const Vec& u)>;
    using Linearization = std::function<Mat(const Vec& u)>;
    using Norm = std::function<double(const Vec& u)>;
    using LineFunctional = std::function<double(double lambda)>;
    using LineFactory = std::function<LineFunctional(const Vec& u, const Vec& v, const Vec& x)>;

    static GalerkinOperator make_diagonal(std::string name, double t, std::shared_ptr<const FourierBasis> basis,
                                          Vec diagonal, WeakForm weak_form);
    static GalerkinOperator make_dense(std::string name, double t, std::shared_ptr<const FourierBasis> basis,
                                       Vec pairing_density, Mat pairing_matrix, WeakForm weak_form);
    /// `linearization` returns the pairing matrix of the operator frozen at u.
    static GalerkinOperator make_nonlinear(std::string name, double t, std::shared_ptr<const FourierBasis> basis,
                                           Vec pairing_density, Residual residual, WeakForm weak_form,
                                           Linearization linearization);

    const std::string& name() const noexcept { return name_; }
    double time() const noexcept { return t_; }
    int mode_count() const noexcept { return basis_->mode_count(); }
    int size() const noexcept { return basis_->size(); }
    const FourierBasis& basis() const noexcept { return *basis_; }
    bool is_linear() const noexcept { return !residual_fn_; }
    const std::optional<Vec>& diagonal() const noexcept { return diagonal_; }
    /// Operators on the mean-zero subspace ignore and never produce the constant mode.
    bool mean_zero() const noexcept { return mean_zero_; }

    Vec apply(const Vec& u) const;
    Vec residual(const Vec& u) const;
    double pairing(const Vec& u, const Vec& v) const;
    double pairing_via_action(const Vec& u, const Vec& v) const;

    /// Action matrix (linear operators only).
    Mat matrix() const;
    /// S_ij = ⟨A φ_j, φ_i⟩ (linear operators only).
    Mat pairing_matrix() const;
    /// Action matrix of the operator frozen at u (lagged coefficients); equals
    /// matrix() for linear operators.
    Mat linearized_at(const Vec& u) const;

    const Mat& gram() const noexcept { return gram_; }
    const Vec& pairing_density() const noexcept { return density_; }

    /// ‖u‖_V. Defaults to the spectral H¹ norm √Σ(1+λ_i)u_i².
    double v_norm(const Vec& u) const;

    /// A - f with f the Nemytskii operator of `nl`, paired in the same measure.
    GalerkinOperator minus_nonlinearity(const NonlinearitySpec& nl) const;

    /// λ ↦ ⟨A(u + λv), x⟩. Defaults to x·residual(u + λv); operators may
    /// install a cheaper evaluator on precomputed grids.
    LineFunctional line_pairing(const Vec& u, const Vec& v, const Vec& x) const;

    void set_v_norm(Norm norm) { v_norm_ = std::move(norm); }
    void set_line_factory(LineFactory factory) { line_factory_ = std::move(factory); }
    void set_mean_zero(bool flag) { mean_zero_ = flag; }

private:
    GalerkinOperator(std::string name, double t, std::shared_ptr<const FourierBasis> basis, Vec density);
    Vec solve_gram(const Vec& r) const;
    Mat solve_gram(const Mat& r) const;
    Vec restrict_input(const Vec& u) const;

    std::string name_;
    double t_;
    std::shared_ptr<const FourierBasis> basis_;
    Vec density_;
    Mat gram_;
    Eigen::LDLT<Mat> gram_solver_;
    std::optional<double> gram_scale_; // G = scale·I when the pairing density is a multiple of ρ₀
    std::optional<Vec> diagonal_;
    Mat pairing_matrix_;
    Mat action_matrix_;
    WeakForm weak_form_;
    Residual residual_fn_;
    Linearization linearization_;
    Norm v_norm_;
    LineFactory line_factory_;
    bool mean_zero_ = false;
};

/// Pure map t ↦ A(t).
using OperatorProvider = std::function<GalerkinOperator(double t)>;

/// Pullback of the heat operator on the MCF sphere written on the unit circle:
/// d_i = (n² - λ_i)/(1 - 2nt). Requires a basis with g₀ = 1 and t < 1/(2n).
GalerkinOperator assemble_mcf_sphere(std::shared_ptr<const FourierBasis> basis, int n, double t);

/// Plain Laplace-Beltrami operator -λ_i of the basis metric.
GalerkinOperator assemble_laplace_beltrami(std::shared_ptr<const FourierBasis> basis);

/// VH(θ, t) with declared bound |VH| ≤ k₁.
struct NormalVelocityTerm {
    std::function<double(double theta, double t)> value;
    double k1 = 0.0;
    std::string label;

    static NormalVelocityTerm constant(double vh);
    /// VH = -n²/(1-2nt), k₁ = n²/(1-2nT).
    static NormalVelocityTerm mcf(int n, double horizon);
};

/// Weak form of Δ_{g_t} - VH paired in H_{g_t}:
/// ⟨Au, v⟩ = -∫ (g^θθ u'v' + VH uv) √|g_t| dθ.
GalerkinOperator assemble_moving_surface(const geometry::MetricFamily& family, const NormalVelocityTerm& vh,
                                         double t);

/// c₀ + c₁ cos θ + s₁ sin θ on the angle chart.
struct CoefficientField {
    double mean = 0.0;
    double cos1 = 0.0;
    double sin1 = 0.0;

    double value(double theta) const noexcept;
    double derivative(double theta) const noexcept;
    std::string describe() const;
};

struct ParabolicCoefficients {
    CoefficientField a{1.0, 0.0, 0.0};
    CoefficientField b{};
    CoefficientField ctilde{};

    struct Bounds {
        double a_lower;   ///< ā
        double a_upper;   ///< b̄
        double b_sup;     ///< ‖b‖_∞
        double c_sup;     ///< ‖c̃‖_∞
        double max_div_b; ///< max over the grid of div(b)
    };
    /// Scans the grid; throws std::invalid_argument when ā <= 0 or div b > 0
    /// anywhere (tolerance 1e-12).
    Bounds validate(const FourierBasis& basis) const;
    std::string describe() const;
};

/// F*_t A F_t on the reference manifold, paired in H₀:
/// -∫ (a g^θθ_t u'v' + b u'v + c̃ uv) ρ₀ dθ.
GalerkinOperator assemble_general_parabolic(const ParabolicCoefficients& coef, const geometry::PullbackMap& map,
                                            double t);

/// -∫ |∇u|^{p-2} ⟨∇u, ∇v⟩_g dν(g_t). Throws for p <= 2 or inputs with a
/// nonzero mean.
double p_laplace_pairing(const Vec& u, const Vec& v, double p, const geometry::MetricFamily& family,
                         double t = 0.0);

/// p-Laplace-Beltrami on the mean-zero subspace with V = W^{1,p} norm.
GalerkinOperator assemble_p_laplace(const geometry::MetricFamily& family, double p, double t = 0.0);

/// (‖u‖^p_{L^p} + ‖∇u‖^p_{L^p})^{1/p} in dν(g_t).
double w1p_norm(const Vec& u, double p, const geometry::MetricFamily& family, double t = 0.0);

/// CSV with columns (row, col, value).
std::string pairing_matrix_csv(const Mat& m);

} // namespace evspde::operators
