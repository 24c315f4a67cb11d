#ifndef SOBMOR_PARAM_HPP
#define SOBMOR_PARAM_HPP

#include <array>
#include <filesystem>
#include <string>

#include "sobmor/models.hpp"
#include "sobmor/types.hpp"

namespace sobmor {

/// Structured parametrization tag.
enum class Structure { ph, sso_full, sso_diag_m };

std::string to_string(Structure s);
Structure structure_from_string(const std::string& s);

/// Partition of a flat parameter vector into the blocks
/// (theta_J, theta_R, theta_Q, theta_B) or (theta_M, theta_D, theta_K, theta_B).
struct ParamLayout {
    Structure structure = Structure::ph;
    Index n_x = 0;
    Index n_u = 0;

    std::array<Index, 4> block_sizes() const;
    std::array<Index, 4> block_offsets() const;
    Index size() const;

    bool operator==(const ParamLayout&) const = default;
};

/// Flat real parameter vector theta together with its partition map.
class ParamVector {
public:
    ParamVector(ParamLayout layout, Vector data);
    static ParamVector zero(ParamLayout layout);

    const ParamLayout& layout() const { return layout_; }
    const Vector& data() const { return data_; }
    Vector& data() { return data_; }
    Index size() const { return data_.size(); }

    Eigen::Ref<const Vector> block(int i) const;
    Eigen::Ref<Vector> block(int i);

private:
    ParamLayout layout_;
    Vector data_;
};

struct AssembleOptions {
    /// Ridge added as ridge * I to the parametrized Gram matrices, keeping
    /// intermediate ROM transfer functions well-defined when requested.
    double ridge = 0.0;
};

PHModel assemble_ph(const ParamVector& theta, const AssembleOptions& opts = {});
SSOModel assemble_sso(const ParamVector& theta, const AssembleOptions& opts = {});

ParamVector extract_theta_ph(const PHModel& model);
ParamVector extract_theta_sso(const SSOModel& model, Structure layout);

/// Upper-triangular U with nonnegative diagonal and U^T U = S for symmetric
/// S >= 0; eigenvalues in [-tol*||S||_2, 0) are clipped to zero, below that
/// throws StructureError.
Matrix psd_triangular_factor(const Matrix& S, double tol = 1e-10);

// Serialization: one-line header "structure n_x n_u", then one value per line.
void save_param_vector(const std::filesystem::path& path, const ParamVector& theta);
ParamVector load_param_vector(const std::filesystem::path& path);

} // namespace sobmor

#endif
