#ifndef SOBMOR_MODELS_HPP
#define SOBMOR_MODELS_HPP

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "sobmor/types.hpp"

namespace sobmor {

/// First-order realization x' = Ax + Bu, y = Cx + Du.
struct StateSpaceModel {
    Matrix A, B, C, D;

    StateSpaceModel() = default;
    StateSpaceModel(Matrix A_, Matrix B_, Matrix C_, Matrix D_);

    Index order() const { return A.rows(); }
    Index inputs() const { return B.cols(); }
    Index outputs() const { return C.rows(); }
};

/// Port-Hamiltonian realization x' = (J-R)Qx + Bu, y = B^T Q x with
/// J = -J^T and R, Q positive semidefinite.
struct PHModel {
    Matrix J, R, Q, B;

    PHModel() = default;
    PHModel(Matrix J_, Matrix R_, Matrix Q_, Matrix B_);

    Index order() const { return J.rows(); }
    Index inputs() const { return B.cols(); }

    /// Throws StructureError if J is not skew (entrywise to skew_tol, relative
    /// to the scale of J) or R, Q have eigenvalues below -psd_tol * ||.||_2.
    void check_structure(double skew_tol = 1e-12, double psd_tol = 1e-10) const;
};

/// Symmetric second-order realization Mx'' + Dx' + Kx = Bu, y = B^T x with
/// M, D, K symmetric positive semidefinite.
struct SSOModel {
    Matrix M, D, K, B;

    SSOModel() = default;
    SSOModel(Matrix M_, Matrix D_, Matrix K_, Matrix B_);

    Index order() const { return M.rows(); }
    Index inputs() const { return B.cols(); }

    void check_structure(double sym_tol = 1e-12, double psd_tol = 1e-10) const;
};

/// Generalized first-order realization E x' = Ax + Bu, y = Cx.
struct DescriptorModel {
    Matrix E, A, B, C;

    Index order() const { return A.rows(); }
    Index inputs() const { return B.cols(); }
    Index outputs() const { return C.rows(); }
};

using AnyModel = std::variant<StateSpaceModel, PHModel, SSOModel>;

// Transfer-function evaluation. One linear solve per point; throws
// SingularPencilError when the shifted pencil is singular at s.
ComplexMatrix eval_tf(const StateSpaceModel& model, Complex s);
ComplexMatrix eval_tf(const DescriptorModel& model, Complex s);
ComplexMatrix eval_tf_ph(const PHModel& model, Complex s);
ComplexMatrix eval_tf_sso(const SSOModel& model, Complex s);
ComplexMatrix eval_tf_any(const AnyModel& model, Complex s);

// Structure conversions. Transfer functions are preserved.
StateSpaceModel ph_to_state_space(const PHModel& model);
DescriptorModel sso_to_first_order(const SSOModel& model);
/// Explicit (E = I) form; requires M invertible.
StateSpaceModel sso_to_first_order_explicit(const SSOModel& model);

/// Number of inputs = outputs of a model (square transfer function for the
/// structured classes; for StateSpaceModel requires n_y inputs/outputs as is).
Index model_order(const AnyModel& model);
Index model_inputs(const AnyModel& model);
Index model_outputs(const AnyModel& model);

/// Ordered sample points s_i = i*omega_i on the imaginary axis with optional
/// cached evaluations G(s_i). Points are strictly increasing and nonnegative.
class FrequencySampleSet {
public:
    explicit FrequencySampleSet(std::vector<double> omegas);

    Index size() const { return static_cast<Index>(omegas_.size()); }
    double omega(Index i) const { return omegas_[static_cast<std::size_t>(i)]; }
    Complex point(Index i) const { return Complex(0.0, omegas_[static_cast<std::size_t>(i)]); }
    const std::vector<double>& omegas() const { return omegas_; }

    bool has_values() const { return !values_.empty(); }
    const ComplexMatrix& value(Index i) const;
    const std::vector<ComplexMatrix>& values() const { return values_; }
    void set_values(std::vector<ComplexMatrix> values);
    void clear_values() { values_.clear(); }

private:
    std::vector<double> omegas_;
    std::vector<ComplexMatrix> values_;
};

// Counter over all transfer-function linear solves, used to verify that cached
// FOM samples are reused instead of recomputed.
std::int64_t solve_count();
void reset_solve_count();

// Plain-text matrix files: header line "rows cols", then row-major
// whitespace-separated entries. A manifest bundles one model as role->filename
// lines after a "type ph|sso|ss" line.
void write_matrix_file(const std::filesystem::path& path, const Matrix& A);
Matrix read_matrix_file(const std::filesystem::path& path);
void save_model_manifest(const std::filesystem::path& manifest_path, const AnyModel& model);
AnyModel load_model_manifest(const std::filesystem::path& manifest_path);

} // namespace sobmor

#endif
