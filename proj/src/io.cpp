#include "dirac_bvp/io.hpp"

#include "dirac_bvp/error.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace dbvp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string type_name(const Json& j) { return std::string(j.type_name()); }

std::string escape_pointer(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out += c;
        }
    }
    return out;
}

} // namespace

ConfigNode::ConfigNode(const Json& value, std::string path) : value_(&value), path_(std::move(path)) {}

void ConfigNode::fail(const std::string& message) const {
    throw Error(ErrorKind::ConfigError, (path_.empty() ? std::string("/") : path_) + ": " + message);
}

bool ConfigNode::has(const std::string& key) const {
    return value_->is_object() && value_->contains(key);
}

ConfigNode ConfigNode::at(const std::string& key) const {
    if (!value_->is_object()) fail("expected an object, found " + type_name(*value_));
    auto it = value_->find(key);
    if (it == value_->end()) {
        throw Error(ErrorKind::ConfigError, path_ + "/" + escape_pointer(key) + ": missing required key");
    }
    return ConfigNode(*it, path_ + "/" + escape_pointer(key));
}

std::optional<ConfigNode> ConfigNode::find(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
}

ConfigNode ConfigNode::at(std::size_t index) const {
    if (!value_->is_array()) fail("expected an array, found " + type_name(*value_));
    if (index >= value_->size()) fail("index " + std::to_string(index) + " out of range");
    return ConfigNode((*value_)[index], path_ + "/" + std::to_string(index));
}

std::size_t ConfigNode::size() const {
    if (!value_->is_array()) fail("expected an array, found " + type_name(*value_));
    return value_->size();
}

double ConfigNode::number() const {
    if (!value_->is_number()) fail("expected a number, found " + type_name(*value_));
    return value_->get<double>();
}

int ConfigNode::integer() const {
    if (!value_->is_number_integer()) fail("expected an integer, found " + type_name(*value_));
    return value_->get<int>();
}

std::uint64_t ConfigNode::unsigned_integer() const {
    if (!value_->is_number_unsigned() && !(value_->is_number_integer() && value_->get<long long>() >= 0)) {
        fail("expected a nonnegative integer, found " + type_name(*value_));
    }
    return value_->get<std::uint64_t>();
}

bool ConfigNode::boolean() const {
    if (!value_->is_boolean()) fail("expected a boolean, found " + type_name(*value_));
    return value_->get<bool>();
}

std::string ConfigNode::string() const {
    if (!value_->is_string()) fail("expected a string, found " + type_name(*value_));
    return value_->get<std::string>();
}

Eigen::VectorXd ConfigNode::vector() const {
    const std::size_t n = size();
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = at(i).number();
    return v;
}

Eigen::MatrixXd ConfigNode::matrix() const {
    const std::size_t rows = size();
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    const std::size_t cols = at(0).size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const ConfigNode row = at(r);
        if (row.size() != cols) row.fail("row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.at(c).number();
        }
    }
    return m;
}

std::vector<Eigen::MatrixXd> ConfigNode::matrix_list() const {
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).matrix());
    return out;
}

std::vector<int> ConfigNode::int_list() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).integer());
    return out;
}

double ConfigNode::number_or(const std::string& key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
}

int ConfigNode::integer_or(const std::string& key, int fallback) const {
    return has(key) ? at(key).integer() : fallback;
}

bool ConfigNode::boolean_or(const std::string& key, bool fallback) const {
    return has(key) ? at(key).boolean() : fallback;
}

std::string ConfigNode::string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? at(key).string() : fallback;
}

Json parse_json(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::ConfigError,
                    origin + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

Json load_json_file(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorKind::ConfigError, file + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str(), file);
}

void check_schema_version(const ConfigNode& root) {
    if (!root.raw().is_object()) root.fail("expected an object at the root");
    const ConfigNode v = root.at("schema_version");
    if (v.integer() != kSchemaVersion) {
        v.fail("unsupported schema version " + std::to_string(v.integer()) + ", expected " +
               std::to_string(kSchemaVersion));
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined value.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SpectrumSetup spectrum_from_config(const ConfigNode& node) {
    SpectrumSetup out;
    const ConfigNode source = node.at("source");
    const std::string kind = source.string();
    if (kind == "modes") {
        const Eigen::VectorXd l = node.at("lambdas").vector();
        for (Eigen::Index i = 0; i < l.size(); ++i) out.modes.push_back(EigenMode{static_cast<int>(i), l(i)});
        std::stable_sort(out.modes.begin(), out.modes.end(),
                         [](const EigenMode& a, const EigenMode& b) { return a.lambda < b.lambda; });
    } else if (kind == "matrix" || kind == "block") {
        const ConfigNode m = node.at(kind == "matrix" ? "matrix" : "a");
        Eigendecomposition eig;
        try {
            eig = kind == "matrix" ? eigendecompose_symmetric(m.matrix()) : block_operator(m.matrix());
        } catch (const Error& e) {
            m.fail(e.what());
        }
        out.modes = eig.modes;
        out.basis = eig.basis;
        if (kind == "matrix") {
            out.matrix = m.matrix();
        } else {
            const Eigen::MatrixXd a = m.matrix();
            Eigen::MatrixXd full = Eigen::MatrixXd::Zero(a.rows() + a.cols(), a.rows() + a.cols());
            full.topRightCorner(a.cols(), a.rows()) = a.transpose();
            full.bottomLeftCorner(a.rows(), a.cols()) = a;
            out.matrix = full;
        }
    } else if (kind == "circle") {
        out.modes = circle_dirac_modes(node.at("n_max").integer(), node.boolean_or("antiperiodic", false));
    } else if (kind == "circle_fd") {
        const ConfigNode pts = node.at("points");
        if (pts.integer() < 3) pts.fail("need at least 3 points");
        const Eigendecomposition eig = eigendecompose_symmetric(circle_dirac_central_difference(pts.integer()));
        out.modes = eig.modes;
        out.basis = eig.basis;
    } else {
        source.fail("unknown spectrum source '" + kind + "'");
    }
    if (out.modes.empty()) node.fail("spectrum is empty");
    return out;
}

namespace {

Eigen::VectorXd sized_vector(const ConfigNode& node, Eigen::Index n) {
    const Eigen::VectorXd v = node.vector();
    if (v.size() != n) {
        node.fail("expected " + std::to_string(n) + " entries, found " + std::to_string(v.size()));
    }
    return v;
}

CylinderField source_from_config(const std::optional<ConfigNode>& node, Eigen::Index n, const Grid& grid,
                                 std::uint64_t seed) {
    CylinderField f = zero_field(static_cast<std::size_t>(n), grid);
    if (!node) return f;
    const std::string type = node->string_or("type", "zero");
    if (type == "zero") return f;
    if (type == "constant") {
        const Eigen::VectorXd v = sized_vector(node->at("values"), n);
        for (int i = 0; i < grid.nodes(); ++i) f.values.col(i) = v;
    } else if (type == "samples") {
        const ConfigNode values = node->at("values");
        const Eigen::MatrixXd m = values.matrix();
        if (m.rows() != n || m.cols() != grid.nodes()) {
            values.fail("expected " + std::to_string(n) + " x " + std::to_string(grid.nodes()) + " samples");
        }
        f.values = m;
    } else if (type == "random") {
        const double amplitude = node->number_or("amplitude", 1.0);
        const std::uint64_t stream = node->has("seed") ? node->at("seed").unsigned_integer() : 0;
        std::mt19937_64 rng(mix_seed(seed, stream));
        std::normal_distribution<double> dist(0.0, amplitude);
        for (int i = 0; i < grid.nodes(); ++i) {
            for (Eigen::Index a = 0; a < n; ++a) f.values(a, i) = dist(rng);
        }
    } else {
        node->at("type").fail("unknown source type '" + type + "'");
    }
    return f;
}

} // namespace

ModelSetup model_from_config(const ConfigNode& root, std::uint64_t seed) {
    const SpectrumSetup spectrum = spectrum_from_config(root.at("spectrum"));
    const ConfigNode kappa_node = root.at("kappa");
    const ConfigNode delta_node = root.at("delta");
    const double kappa = kappa_node.number();
    const double delta = delta_node.number();
    if (!(kappa > 0.0)) kappa_node.fail("kappa must be positive");
    if (!(delta > 0.0)) delta_node.fail("delta must be positive");
    const int cells = root.integer_or("cells", 64);
    if (cells < 2) root.at("cells").fail("need at least 2 cells");
    std::optional<std::vector<int>> hat;
    if (root.has("lambda_hat")) hat = root.at("lambda_hat").int_list();

    ModelSetup out;
    const ConfigNode bc = root.at("bc");
    const ConfigNode type_node = bc.at("type");
    const std::string type = type_node.string();
    const auto n = static_cast<Eigen::Index>(spectrum.modes.size());
    auto sigma_of = [&](const SpectralPartition&) {
        if (!bc.has("sigma")) return BoundaryField{Eigen::VectorXd::Zero(n)};
        return BoundaryField{sized_vector(bc.at("sigma"), n)};
    };
    try {
        if (type == "aps" || type == "graph") {
            SpectralPartition part;
            try {
                part = SpectralPartition::build(spectrum.modes, kappa, delta, hat);
            } catch (const Error& e) {
                root.fail(e.what());
            }
            Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(part.p_set().size()),
                                                      static_cast<Eigen::Index>(part.complement_set().size()));
            if (type == "graph") {
                const ConfigNode kn = bc.at("K");
                const Eigen::MatrixXd given = kn.matrix();
                if (given.rows() != k.rows() || given.cols() != k.cols()) {
                    kn.fail("K must be " + std::to_string(k.rows()) + " x " + std::to_string(k.cols()) +
                            " (|P| x |1-P|)");
                }
                k = given;
            }
            out.problem.bc = make_graph_condition(part, k, sigma_of(part));
        } else if (type == "chiral") {
            if (!spectrum.matrix) bc.fail("chiral condition needs a dense spectrum matrix");
            const ConfigNode eps = bc.at("epsilon");
            const int sign = bc.integer_or("sign", 1);
            out.chiral = chiral_condition(*spectrum.matrix, eps.matrix(), sign, kappa, delta);
            out.problem.bc = with_sigma(out.chiral->bc, sigma_of(out.chiral->bc.partition));
        } else {
            type_node.fail("unknown boundary condition type '" + type + "'");
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError) throw;
        bc.fail(e.what());
    }
    const Grid grid = make_grid(delta, cells);
    out.problem.f = source_from_config(root.find("f"), n, grid, seed);
    return out;
}

Perturbation perturbation_from_config(const ConfigNode& node, const Grid& grid, Eigen::Index modes) {
    const ConfigNode mats = node.at("matrices");
    std::vector<Eigen::MatrixXd> list = mats.matrix_list();
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].rows() != modes || list[i].cols() != modes) {
            mats.at(i).fail("expected a " + std::to_string(modes) + " x " + std::to_string(modes) + " matrix");
        }
    }
    Perturbation b;
    if (list.size() == 1) {
        b = constant_perturbation(list.front(), grid);
    } else if (static_cast<int>(list.size()) == grid.nodes()) {
        b = Perturbation{grid, list};
    } else {
        mats.fail("expected 1 or " + std::to_string(grid.nodes()) + " matrices");
    }
    return scaled(b, node.number_or("scale", 1.0));
}

TorusSetup torus_from_config(const ConfigNode& root, std::uint64_t seed) {
    TorusSetup out;
    const int dims = root.at("dims").integer();
    if (dims != 1 && dims != 2) root.at("dims").fail("dims must be 1 or 2");
    const int cutoff = root.at("cutoff").integer();
    if (cutoff < 0 || cutoff > 64) root.at("cutoff").fail("cutoff must lie in [0, 64]");
    const ConfigNode a0n = root.at("a0");
    std::vector<Eigen::MatrixXd> a0 = a0n.matrix_list();
    if (static_cast<int>(a0.size()) != dims) a0n.fail("need one matrix per axis");
    const Eigen::Index comps = a0.front().rows();
    for (std::size_t j = 0; j < a0.size(); ++j) {
        if (a0[j].rows() != comps || a0[j].cols() != comps) a0n.at(j).fail("matrices must be square of equal size");
    }
    try {
        out.op0 = make_constant_operator(a0);
    } catch (const Error& e) {
        a0n.fail(e.what());
    }

    struct Variation {
        int axis;
        Eigen::MatrixXd amplitude;
        std::array<int, 2> wave;
        bool cosine;
    };
    auto read_wave = [dims](const ConfigNode& w) {
        const std::vector<int> k = w.int_list();
        if (static_cast<int>(k.size()) != dims) w.fail("wave needs one entry per axis");
        return std::array<int, 2>{k[0], dims == 2 ? k[1] : 0};
    };
    std::vector<Variation> variations;
    if (const auto vs = root.find("variation")) {
        for (std::size_t i = 0; i < vs->size(); ++i) {
            const ConfigNode v = vs->at(i);
            Variation var;
            var.axis = v.at("axis").integer();
            if (var.axis < 0 || var.axis >= dims) v.at("axis").fail("axis out of range");
            var.amplitude = v.at("amplitude").matrix();
            if (var.amplitude.rows() != comps || var.amplitude.cols() != comps) v.at("amplitude").fail("wrong size");
            var.wave = read_wave(v.at("wave"));
            var.cosine = v.string_or("kind", "sin") == "cos";
            variations.push_back(var);
        }
    }
    const std::vector<Eigen::MatrixXd> base = a0;
    out.coeffs.dims = dims;
    out.coeffs.a = [base, variations](int axis, const std::array<double, 2>& x) {
        Eigen::MatrixXd m = base[static_cast<std::size_t>(axis)];
        for (const auto& v : variations) {
            if (v.axis != axis) continue;
            const double phase = 2.0 * kPi * (v.wave[0] * x[0] + v.wave[1] * x[1]);
            m += (v.cosine ? std::cos(phase) : std::sin(phase)) * v.amplitude;
        }
        return m;
    };
    if (const auto bn = root.find("b")) {
        const Eigen::MatrixXd constant =
            bn->has("constant") ? bn->at("constant").matrix() : Eigen::MatrixXd::Zero(comps, comps);
        const Eigen::MatrixXd amplitude =
            bn->has("amplitude") ? bn->at("amplitude").matrix() : Eigen::MatrixXd::Zero(comps, comps);
        if (constant.rows() != comps || constant.cols() != comps) bn->at("constant").fail("wrong size");
        if (amplitude.rows() != comps || amplitude.cols() != comps) bn->at("amplitude").fail("wrong size");
        const std::array<int, 2> wave = bn->has("wave") ? read_wave(bn->at("wave")) : std::array<int, 2>{0, 0};
        out.coeffs.b = [constant, amplitude, wave](const std::array<double, 2>& x) {
            const double phase = 2.0 * kPi * (wave[0] * x[0] + wave[1] * x[1]);
            return Eigen::MatrixXd(constant + std::sin(phase) * amplitude);
        };
    }
    out.b_fraction = root.number_or("b_fraction", 0.0);
    out.tol = root.number_or("tol", 1e-10);
    out.max_iter = root.integer_or("max_iter", 200);

    out.f = zero_torus_field(dims, cutoff, static_cast<int>(comps));
    const ConfigNode fn = root.at("f");
    const std::string type = fn.string_or("type", "mode");
    if (type == "mode") {
        const std::array<int, 2> k = read_wave(fn.at("wave"));
        if (std::abs(k[0]) > cutoff || std::abs(k[1]) > cutoff) fn.at("wave").fail("wave outside the lattice");
        const int comp = fn.integer_or("component", 0);
        if (comp < 0 || comp >= comps) fn.at("component").fail("component out of range");
        const std::string kind = fn.string_or("kind", "cos");
        const int i = out.f.index_of(k);
        const int j = out.f.index_of({-k[0], -k[1]});
        if (kind == "exp") {
            out.f.coeffs[static_cast<std::size_t>(i)](comp) += 1.0;
        } else if (kind == "cos") {
            out.f.coeffs[static_cast<std::size_t>(i)](comp) += 0.5;
            out.f.coeffs[static_cast<std::size_t>(j)](comp) += 0.5;
            out.f.real = true;
        } else if (kind == "sin") {
            out.f.coeffs[static_cast<std::size_t>(i)](comp) += std::complex<double>(0.0, -0.5);
            out.f.coeffs[static_cast<std::size_t>(j)](comp) += std::complex<double>(0.0, 0.5);
            out.f.real = true;
        } else {
            fn.at("kind").fail("kind must be cos, sin or exp");
        }
    } else if (type == "random") {
        const std::uint64_t stream = fn.has("seed") ? fn.at("seed").unsigned_integer() : 0;
        std::mt19937_64 rng(mix_seed(seed, stream));
        std::normal_distribution<double> dist(0.0, 1.0);
        for (auto& c : out.f.coeffs) {
            for (Eigen::Index a = 0; a < comps; ++a) c(a) = std::complex<double>(dist(rng), dist(rng));
        }
    } else if (type == "coeffs") {
        const Eigen::MatrixXd re = fn.at("coeffs_re").matrix();
        const Eigen::MatrixXd im = fn.has("coeffs_im") ? fn.at("coeffs_im").matrix() : Eigen::MatrixXd::Zero(re.rows(), re.cols());
        if (re.rows() != out.f.lattice_size() || re.cols() != comps || im.rows() != re.rows() || im.cols() != re.cols()) {
            fn.fail("coefficients must be lattice_size x components");
        }
        for (int i = 0; i < out.f.lattice_size(); ++i) {
            for (Eigen::Index a = 0; a < comps; ++a) out.f.coeffs[static_cast<std::size_t>(i)](a) = {re(i, a), im(i, a)};
        }
    } else {
        fn.at("type").fail("unknown torus source type '" + type + "'");
    }
    return out;
}

double parse_log_ratio(const std::string& text) {
    std::string s;
    for (char c : text) {
        if (c != ' ' && c != '*') s += c;
    }
    if (s.empty()) throw Error(ErrorKind::ConfigError, "empty ratio");
    double factor = 1.0;
    if (s.size() >= 2 && s.substr(s.size() - 2) == "pi") {
        factor = kPi;
        s = s.substr(0, s.size() - 2);
        if (s.empty()) return kPi;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v * factor;
    } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigError, "cannot parse ratio '" + text + "'");
    }
}

RayleighProblem rayleigh_from_config(const ConfigNode& root) {
    const ConfigNode kind_node = root.at("kind");
    const std::string kind = kind_node.string();
    const int n = root.at("n").integer();
    const ConfigNode ratio = root.at("ratio");
    double log_ratio = 0.0;
    if (ratio.raw().is_string()) {
        try {
            log_ratio = parse_log_ratio(ratio.string());
        } catch (const Error& e) {
            ratio.fail(e.what());
        }
    } else {
        log_ratio = ratio.number();
    }
    if (!(log_ratio > 0.0)) ratio.fail("log ratio must be positive");
    const int grid = root.integer_or("grid", 4096);
    if (kind == "hardy") {
        if (n < 3) root.at("n").fail("hardy needs n >= 3");
        return hardy_problem(n, log_ratio, grid);
    }
    if (kind == "mckean") {
        if (n < 2) root.at("n").fail("mckean needs n >= 2");
        const std::string bc = root.string_or("bc", "logneumann");
        EndCondition end = EndCondition::LogNeumann;
        if (bc == "natural") {
            end = EndCondition::Natural;
        } else if (bc != "logneumann") {
            root.at("bc").fail("bc must be logneumann or natural");
        }
        return mckean_problem(n, log_ratio, grid, end);
    }
    kind_node.fail("kind must be hardy or mckean");
}

Json to_json(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json to_json(const Eigen::MatrixXd& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

Json to_json(const std::vector<double>& v) {
    Json out = Json::array();
    for (double x : v) out.push_back(x);
    return out;
}

Json inequality(const std::string& name, double lhs, double rhs) {
    Json j;
    j["name"] = name;
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    j["margin"] = rhs - lhs;
    j["holds"] = lhs <= rhs;
    return j;
}

bool all_inequalities_hold(const Json& report) {
    if (report.is_object()) {
        for (auto it = report.begin(); it != report.end(); ++it) {
            if (it.key() == "holds" && it.value().is_boolean() && !it.value().get<bool>()) return false;
            if (!all_inequalities_hold(it.value())) return false;
        }
    } else if (report.is_array()) {
        for (const auto& v : report) {
            if (!all_inequalities_hold(v)) return false;
        }
    }
    return true;
}

Json partition_json(const SpectralPartition& partition) {
    Json j;
    j["kappa"] = partition.kappa();
    j["delta"] = partition.delta();
    j["theta0"] = partition.theta0();
    j["ell"] = partition.ell();
    Json modes = Json::array();
    for (std::size_t pos = 0; pos < partition.size(); ++pos) {
        Json m;
        m["index"] = partition.modes()[pos].index;
        m["lambda"] = partition.lambda(pos);
        const Region r = partition.region(pos);
        m["region"] = r == Region::Plus ? "plus" : (r == Region::Minus ? "minus" : "zero");
        m["in_p"] = partition.in_p(pos);
        modes.push_back(m);
    }
    j["modes"] = modes;
    return j;
}

Json solve_report_json(const SolveReport& report) {
    Json j;
    j["h1_norm_sq"] = report.h1_norm_sq;
    j["data_norm_sq"] = report.data_norm_sq;
    j["c4"] = report.c4;
    j["p0_l2_norm"] = report.p0_l2_norm;
    Json checks = Json::array();
    checks.push_back(inequality("a_priori_estimate", report.h1_norm_sq,
                                report.c4 * report.c4 * report.data_norm_sq * (1.0 + 1e-8)));
    checks.push_back(inequality("bc_residual_left", report.bc_residual_left, 1e-12));
    checks.push_back(inequality("bc_residual_right", report.bc_residual_right, 1e-12));
    j["checks"] = checks;
    return j;
}

Json iteration_report_json(const IterationReport& report) {
    Json j;
    j["iterations"] = report.iterations;
    j["converged"] = report.converged;
    j["c4"] = report.c4;
    j["op_norm"] = report.op_norm.value;
    j["op_norm_converged"] = report.op_norm.converged;
    j["adjoint_op_norm"] = report.adjoint_op_norm.value;
    j["step_norms"] = to_json(report.step_norms);
    j["contraction_ratios"] = to_json(report.contraction_ratios);
    j["residual_l2"] = report.residual_l2;
    j["h1_norm"] = report.h1_norm;
    Json checks = Json::array();
    checks.push_back(inequality("contraction_factor", report.c4 * report.op_norm.value, 1.0));
    checks.push_back(inequality("a_priori_estimate", report.h1_norm, report.bound));
    checks.push_back(inequality("bc_residual", report.bc_residual, 1e-12));
    j["checks"] = checks;
    return j;
}

std::string format_number(double x) { return Json(x).dump(); }

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + "\"";
    };
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + quote(header[i]);
    out += "\r\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_number(row[i]);
        out += "\r\n";
    }
    return out;
}

std::string field_csv(const CylinderField& field) {
    std::vector<std::string> header{"x"};
    for (Eigen::Index a = 0; a < field.values.rows(); ++a) header.push_back("u" + std::to_string(a));
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < field.grid.nodes(); ++i) {
        std::vector<double> row{field.grid.x(i)};
        for (Eigen::Index a = 0; a < field.values.rows(); ++a) row.push_back(field.values(a, i));
        rows.push_back(row);
    }
    return to_csv(header, rows);
}

void write_text_file(const std::string& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, file + ": cannot open for writing");
    out << text;
    if (!out) throw Error(ErrorKind::InvalidArgument, file + ": write failed");
}

} // namespace dbvp
