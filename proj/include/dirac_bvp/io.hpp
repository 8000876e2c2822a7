#pragma once

// JSON configuration parsing with path-aware errors, problem builders, and
// report serialization (JSON and RFC 4180 CSV).

#include "dirac_bvp/bvp_model.hpp"
#include "dirac_bvp/bvp_perturbed.hpp"
#include "dirac_bvp/poincare.hpp"
#include "dirac_bvp/spectral.hpp"
#include "dirac_bvp/torus.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dbvp {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// A JSON value together with its JSON-pointer path. Every accessor throws
/// ConfigError naming the path on a missing key or a type mismatch.
class ConfigNode {
public:
    ConfigNode(const Json& value, std::string path);

    const std::string& path() const { return path_; }
    const Json& raw() const { return *value_; }

    bool has(const std::string& key) const;
    ConfigNode at(const std::string& key) const;
    std::optional<ConfigNode> find(const std::string& key) const;
    ConfigNode at(std::size_t index) const;
    std::size_t size() const;  // array length

    double number() const;
    int integer() const;
    std::uint64_t unsigned_integer() const;
    bool boolean() const;
    std::string string() const;
    Eigen::VectorXd vector() const;
    Eigen::MatrixXd matrix() const;
    std::vector<Eigen::MatrixXd> matrix_list() const;
    std::vector<int> int_list() const;

    double number_or(const std::string& key, double fallback) const;
    int integer_or(const std::string& key, int fallback) const;
    bool boolean_or(const std::string& key, bool fallback) const;
    std::string string_or(const std::string& key, const std::string& fallback) const;

    [[noreturn]] void fail(const std::string& message) const;

private:
    const Json* value_;
    std::string path_;
};

/// Parses text, throwing ConfigError with the byte offset on malformed JSON.
Json parse_json(const std::string& text, const std::string& origin);
Json load_json_file(const std::string& file);
/// Requires "schema_version": 1 at the root.
void check_schema_version(const ConfigNode& root);

/// Deterministic 64-bit seed for a named sub-stream of a run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// ---- problem builders ------------------------------------------------------

struct SpectrumSetup {
    std::vector<EigenMode> modes;
    std::optional<Eigen::MatrixXd> matrix;  // A, when given densely
    std::optional<Eigen::MatrixXd> basis;
};

/// "spectrum": {"source": "modes", "lambdas": [...]} | {"source": "matrix",
/// "matrix": [[...]]} | {"source": "circle", "n_max", "antiperiodic"} |
/// {"source": "circle_fd", "points"} | {"source": "block", "a": [[...]]}
SpectrumSetup spectrum_from_config(const ConfigNode& node);

struct ModelSetup {
    ModelProblem problem;
    std::optional<ChiralCondition> chiral;
};

/// Root keys: spectrum, kappa, delta, cells, optional lambda_hat, bc, f.
ModelSetup model_from_config(const ConfigNode& root, std::uint64_t seed);

/// "perturbation": {"matrices": [[[...]]]} with one matrix (constant in x) or
/// one per node, optional "scale".
Perturbation perturbation_from_config(const ConfigNode& node, const Grid& grid, Eigen::Index modes);

struct TorusSetup {
    TorusField f;
    CoefficientField coeffs;
    ConstantOperator op0;
    double b_fraction = 0.0;
    double tol = 1e-10;
    int max_iter = 200;
};

TorusSetup torus_from_config(const ConfigNode& root, std::uint64_t seed);

RayleighProblem rayleigh_from_config(const ConfigNode& root);

/// Parses "2pi", "pi", "3.5", "2*pi" style log ratios.
double parse_log_ratio(const std::string& text);

// ---- serialization ---------------------------------------------------------

Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);
Json to_json(const std::vector<double>& v);

/// {"name", "lhs", "rhs", "margin" = rhs - lhs, "holds" = lhs <= rhs}
Json inequality(const std::string& name, double lhs, double rhs);

/// True when every "holds" entry found anywhere in the report is true.
bool all_inequalities_hold(const Json& report);

Json partition_json(const SpectralPartition& partition);
Json solve_report_json(const SolveReport& report);
Json iteration_report_json(const IterationReport& report);

std::string format_number(double x);

/// RFC 4180 CSV with CRLF line endings.
std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows);

/// Rows x, then one column per mode.
std::string field_csv(const CylinderField& field);

void write_text_file(const std::string& file, const std::string& text);

} // namespace dbvp
