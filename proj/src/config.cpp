#include "pntk/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace pntk {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& what) {
    throw Error(ErrorKind::ConfigError, source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

IniDocument parse_ini(std::istream& in, const std::string& source) {
    IniDocument doc;
    doc.source = source;
    std::string current;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find_first_of("#;");
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') fail(source, line, "unterminated section header");
            current = trim(text.substr(1, text.size() - 2));
            if (current.empty()) fail(source, line, "empty section name");
            doc.sections[current];
            doc.header_lines.emplace(current, line);
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) fail(source, line, "expected 'key = value'");
        if (current.empty()) fail(source, line, "key outside of any [section]");
        const std::string key = trim(text.substr(0, eq));
        if (key.empty()) fail(source, line, "empty key");
        auto& sec = doc.sections[current];
        if (sec.contains(key)) {
            fail(source, line, "duplicate key '" + key + "' (first set on line " + std::to_string(sec[key].line) + ")");
        }
        sec[key] = {trim(text.substr(eq + 1)), line};
    }
    return doc;
}

std::string to_string(DataSource s) {
    switch (s) {
        case DataSource::synthetic: return "synthetic";
        case DataSource::idx: return "idx";
        case DataSource::cifar: return "cifar";
        case DataSource::ntkd: return "ntkd";
    }
    return "?";
}

namespace {

std::uint64_t to_u64(const std::string& s) {
    std::uint64_t mult = 1;
    std::string digits = s;
    if (!digits.empty()) {
        switch (std::toupper(static_cast<unsigned char>(digits.back()))) {
            case 'K': mult = 1ull << 10; digits.pop_back(); break;
            case 'M': mult = 1ull << 20; digits.pop_back(); break;
            case 'G': mult = 1ull << 30; digits.pop_back(); break;
            case 'T': mult = 1ull << 40; digits.pop_back(); break;
            default: break;
        }
    }
    std::uint64_t v = 0;
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (digits.empty() || res.ec != std::errc() || res.ptr != digits.data() + digits.size()) {
        throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
    }
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(v, mult, &out)) throw std::invalid_argument("integer overflows 64 bits");
    return out;
}

double to_double(const std::string& s) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("expected a number, got '" + s + "'");
    }
    return v;
}

bool to_bool(const std::string& s) {
    std::string l = s;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
    if (l == "false" || l == "no" || l == "off" || l == "0") return false;
    throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

std::vector<std::string> to_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
std::vector<T> to_uint_list(const std::string& s) {
    std::vector<T> out;
    for (const auto& item : to_list(s)) out.push_back(static_cast<T>(to_u64(item)));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_same_v<T, std::string>) {
            out += v[i];
        } else {
            out += std::to_string(v[i]);
        }
    }
    return out;
}

using Setter = std::function<void(const std::string&)>;
using Schema = std::map<std::string, std::map<std::string, Setter>>;

Schema make_schema(ExperimentConfig& c) {
    const auto size = [](std::size_t& f) { return [&f](const std::string& v) { f = static_cast<std::size_t>(to_u64(v)); }; };
    const auto u64 = [](std::uint64_t& f) { return [&f](const std::string& v) { f = to_u64(v); }; };
    const auto real = [](double& f) { return [&f](const std::string& v) { f = to_double(v); }; };
    const auto flag = [](bool& f) { return [&f](const std::string& v) { f = to_bool(v); }; };
    const auto text = [](std::string& f) { return [&f](const std::string& v) { f = v; }; };

    Schema s;
    s["net"] = {
        {"hidden_layers", size(c.net.hidden_layers)},
        {"width", size(c.net.width)},
        {"activation", [&c](const std::string& v) { c.net.activation = parse_activation(v); }},
        {"leaky_slope", real(c.net.leaky_slope)},
        {"init", [&c](const std::string& v) { c.net.init = parse_init(v); }},
        {"parameterization",
         [&c](const std::string& v) {
             if (v == "standard") {
                 c.net.parameterization = Parameterization::standard;
             } else if (v == "ntk") {
                 c.net.parameterization = Parameterization::ntk;
             } else {
                 throw std::invalid_argument("parameterization must be 'standard' or 'ntk'");
             }
         }},
        {"seed", u64(c.net.seed)},
    };
    s["data"] = {
        {"source",
         [&c](const std::string& v) {
             if (v == "synthetic") c.data.source = DataSource::synthetic;
             else if (v == "idx") c.data.source = DataSource::idx;
             else if (v == "cifar") c.data.source = DataSource::cifar;
             else if (v == "ntkd") c.data.source = DataSource::ntkd;
             else throw std::invalid_argument("source must be synthetic, idx, cifar or ntkd");
         }},
        {"images", text(c.data.images)},
        {"labels", text(c.data.labels)},
        {"cifar_batches", [&c](const std::string& v) { c.data.cifar_batches = to_list(v); }},
        {"path", text(c.data.path)},
        {"classes", size(c.data.classes)},
        {"per_class", size(c.data.per_class)},
        {"dim", size(c.data.dim)},
        {"separation", real(c.data.separation)},
        {"train_n", size(c.data.train_n)},
        {"test_n", size(c.data.test_n)},
        {"stratified", flag(c.data.stratified)},
        {"standardize", flag(c.data.standardize)},
        {"seed", u64(c.data.seed)},
    };
    s["sweep"] = {
        {"widths", [&c](const std::string& v) { c.sweep.widths = to_uint_list<std::size_t>(v); }},
        {"seeds", [&c](const std::string& v) { c.sweep.seeds = to_uint_list<std::uint64_t>(v); }},
        {"checkpoints", [&c](const std::string& v) { c.sweep.checkpoints = to_uint_list<std::size_t>(v); }},
    };
    s["kernel"] = {
        {"kind",
         [&c](const std::string& v) {
             if (v == "entk") c.kernel.kind = KernelChoice::entk;
             else if (v == "pntk") c.kernel.kind = KernelChoice::pntk;
             else if (v == "both") c.kernel.kind = KernelChoice::both;
             else throw std::invalid_argument("kind must be entk, pntk or both");
         }},
        {"mode", [&c](const std::string& v) { c.kernel.mode = PntkMode::parse(v); }},
        {"jitter",
         [&c](const std::string& v) {
             c.kernel.jitter = to_double(v);
             if (!(c.kernel.jitter >= 0.0)) throw std::invalid_argument("jitter must be >= 0");
         }},
        {"center", flag(c.kernel.center)},
        {"memory_cap", u64(c.kernel.memory_cap)},
        {"panel_bytes", u64(c.kernel.panel_bytes)},
    };
    s["train"] = {
        {"batch_size", size(c.train.batch_size)}, {"lr", real(c.train.lr)},
        {"momentum", real(c.train.momentum)},     {"weight_decay", real(c.train.weight_decay)},
        {"epochs", size(c.train.epochs)},
    };
    s["bench"] = {
        {"n_values", [&c](const std::string& v) { c.bench.n_values = to_uint_list<std::size_t>(v); }},
        {"o_values", [&c](const std::string& v) { c.bench.o_values = to_uint_list<std::size_t>(v); }},
        {"widths", [&c](const std::string& v) { c.bench.widths = to_uint_list<std::size_t>(v); }},
        {"warmup", size(c.bench.warmup)},
        {"repeats", size(c.bench.repeats)},
    };
    s["active"] = {
        {"initial_labeled", size(c.active.initial_labeled)},
        {"per_cycle", size(c.active.per_cycle)},
        {"cycles", size(c.active.cycles)},
        {"acquisition",
         [&c](const std::string& v) {
             if (v != "pntk" && v != "entk" && v != "random") {
                 throw std::invalid_argument("acquisition must be pntk, entk or random");
             }
             c.active.acquisition = v;
         }},
        {"pool_cap", size(c.active.pool_cap)},
        {"ref_size", size(c.active.ref_size)},
        {"initial_epochs", size(c.active.initial_epochs)},
        {"retrain_epochs", size(c.active.retrain_epochs)},
        {"warm_start", flag(c.active.warm_start)},
    };
    s["estimate"] = {{"n", u64(c.estimate.n)}, {"o", u64(c.estimate.o)}, {"bytes", u64(c.estimate.bytes)}};
    s["output"] = {{"dir", text(c.output.dir)}, {"save_kernels", flag(c.output.save_kernels)}};
    return s;
}

}  // namespace

ExperimentConfig config_from_ini(const IniDocument& doc) {
    ExperimentConfig cfg;
    const Schema schema = make_schema(cfg);
    for (const auto& [section, entries] : doc.sections) {
        const auto sec = schema.find(section);
        if (sec == schema.end()) {
            const auto h = doc.header_lines.find(section);
            fail(doc.source, h == doc.header_lines.end() ? 0 : h->second, "unknown section [" + section + "]");
        }
        for (const auto& [key, entry] : entries) {
            const auto setter = sec->second.find(key);
            if (setter == sec->second.end()) {
                fail(doc.source, entry.line, "unknown key '" + key + "' in [" + section + "]");
            }
            try {
                setter->second(entry.value);
            } catch (const std::exception& e) {
                fail(doc.source, entry.line, "[" + section + "] " + key + ": " + e.what());
            }
        }
    }
    return cfg;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
    return config_from_ini(parse_ini(in, source));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
    return parse_config(in, path.string());
}

std::string to_ini(const ExperimentConfig& c) {
    std::ostringstream o;
    const auto b = [](bool v) { return v ? "true" : "false"; };
    o << "[net]\n"
      << "hidden_layers = " << c.net.hidden_layers << "\n"
      << "width = " << c.net.width << "\n"
      << "activation = " << to_string(c.net.activation) << "\n"
      << "leaky_slope = " << fmt_double(c.net.leaky_slope) << "\n"
      << "init = " << to_string(c.net.init) << "\n"
      << "parameterization = " << (c.net.parameterization == Parameterization::standard ? "standard" : "ntk") << "\n"
      << "seed = " << c.net.seed << "\n\n";
    o << "[data]\n"
      << "source = " << to_string(c.data.source) << "\n"
      << "images = " << c.data.images << "\n"
      << "labels = " << c.data.labels << "\n"
      << "cifar_batches = " << join(c.data.cifar_batches) << "\n"
      << "path = " << c.data.path << "\n"
      << "classes = " << c.data.classes << "\n"
      << "per_class = " << c.data.per_class << "\n"
      << "dim = " << c.data.dim << "\n"
      << "separation = " << fmt_double(c.data.separation) << "\n"
      << "train_n = " << c.data.train_n << "\n"
      << "test_n = " << c.data.test_n << "\n"
      << "stratified = " << b(c.data.stratified) << "\n"
      << "standardize = " << b(c.data.standardize) << "\n"
      << "seed = " << c.data.seed << "\n\n";
    o << "[sweep]\n"
      << "widths = " << join(c.sweep.widths) << "\n"
      << "seeds = " << join(c.sweep.seeds) << "\n"
      << "checkpoints = " << join(c.sweep.checkpoints) << "\n\n";
    const char* kind = c.kernel.kind == KernelChoice::entk ? "entk" : c.kernel.kind == KernelChoice::pntk ? "pntk" : "both";
    o << "[kernel]\n"
      << "kind = " << kind << "\n"
      << "mode = " << c.kernel.mode.to_string() << "\n"
      << "jitter = " << fmt_double(c.kernel.jitter) << "\n"
      << "center = " << b(c.kernel.center) << "\n"
      << "memory_cap = " << c.kernel.memory_cap << "\n"
      << "panel_bytes = " << c.kernel.panel_bytes << "\n\n";
    o << "[train]\n"
      << "batch_size = " << c.train.batch_size << "\n"
      << "lr = " << fmt_double(c.train.lr) << "\n"
      << "momentum = " << fmt_double(c.train.momentum) << "\n"
      << "weight_decay = " << fmt_double(c.train.weight_decay) << "\n"
      << "epochs = " << c.train.epochs << "\n\n";
    o << "[bench]\n"
      << "n_values = " << join(c.bench.n_values) << "\n"
      << "o_values = " << join(c.bench.o_values) << "\n"
      << "widths = " << join(c.bench.widths) << "\n"
      << "warmup = " << c.bench.warmup << "\n"
      << "repeats = " << c.bench.repeats << "\n\n";
    o << "[active]\n"
      << "initial_labeled = " << c.active.initial_labeled << "\n"
      << "per_cycle = " << c.active.per_cycle << "\n"
      << "cycles = " << c.active.cycles << "\n"
      << "acquisition = " << c.active.acquisition << "\n"
      << "pool_cap = " << c.active.pool_cap << "\n"
      << "ref_size = " << c.active.ref_size << "\n"
      << "initial_epochs = " << c.active.initial_epochs << "\n"
      << "retrain_epochs = " << c.active.retrain_epochs << "\n"
      << "warm_start = " << b(c.active.warm_start) << "\n\n";
    o << "[estimate]\n"
      << "n = " << c.estimate.n << "\n"
      << "o = " << c.estimate.o << "\n"
      << "bytes = " << c.estimate.bytes << "\n\n";
    o << "[output]\n"
      << "dir = " << c.output.dir << "\n"
      << "save_kernels = " << b(c.output.save_kernels) << "\n";
    return o.str();
}

NetworkSpec network_spec(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t output_dim,
                         std::size_t width_override) {
    NetworkSpec s;
    s.input_dim = input_dim;
    s.output_dim = output_dim;
    s.hidden_widths.assign(cfg.net.hidden_layers, width_override ? width_override : cfg.net.width);
    s.activation = cfg.net.activation;
    s.leaky_slope = cfg.net.leaky_slope;
    s.init = cfg.net.init;
    s.parameterization = cfg.net.parameterization;
    s.seed = cfg.net.seed;
    return s;
}

KernelOptions kernel_options(const ExperimentConfig& cfg) {
    KernelOptions o;
    o.memory_cap = cfg.kernel.memory_cap;
    o.panel_bytes = static_cast<std::size_t>(cfg.kernel.panel_bytes);
    return o;
}

TrainConfig train_config(const ExperimentConfig& cfg) {
    TrainConfig t;
    t.batch_size = cfg.train.batch_size;
    t.lr = cfg.train.lr;
    t.momentum = cfg.train.momentum;
    t.weight_decay = cfg.train.weight_decay;
    t.epochs = cfg.train.epochs;
    t.seed = cfg.net.seed;
    return t;
}

}  // namespace pntk
