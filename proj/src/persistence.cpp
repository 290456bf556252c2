#include "seqrisk/persistence.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "seqrisk/errors.hpp"

namespace seqrisk {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'Q', 'R', 'K', 'M', 'D', 'L', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((value >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename T>
T get_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(T)> buf{};
    if (!in.read(reinterpret_cast<char*>(buf.data()), sizeof(T)))
        throw FormatError(std::string("model file truncated while reading ") + what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in, "parameter data")); }

}  // namespace

void write_model(std::ostream& out, const ModelParameters& params) {
    ModelParameters copy = params;
    const auto views = tensors(copy);
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kModelFormatVersion);
    const auto& d = params.dims;
    for (int v : {d.embedding, d.hidden, d.attention, d.factor_hidden, d.risk_hidden})
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(views.size()));
    for (const auto& t : views) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols));
    }
    for (const auto& t : views) {
        for (double v : t.values) put_f64(out, v);
    }
    if (!out) throw std::runtime_error("failed to write model");
}

ModelParameters read_model(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("not a model file (bad magic)");
    const auto version = get_le<std::uint32_t>(in, "version");
    if (version != kModelFormatVersion)
        throw FormatError("unsupported model format version " + std::to_string(version));
    ModelDims dims;
    for (int* field : {&dims.embedding, &dims.hidden, &dims.attention, &dims.factor_hidden, &dims.risk_hidden})
        *field = static_cast<int>(get_le<std::uint32_t>(in, "dimensions"));
    if (dims.embedding < 1 || dims.hidden < 1 || dims.attention < 1 || dims.factor_hidden < 1 || dims.risk_hidden < 1 ||
        dims.embedding > (1 << 20) || dims.hidden > (1 << 16) || dims.attention > (1 << 16) ||
        dims.factor_hidden > (1 << 16) || dims.risk_hidden > (1 << 16))
        throw FormatError("implausible model dimensions");
    ModelParameters params = ModelParameters::zeros(dims);
    auto views = tensors(params);
    const auto count = get_le<std::uint32_t>(in, "tensor count");
    if (count != views.size())
        throw FormatError("tensor count " + std::to_string(count) + " does not match expected " +
                          std::to_string(views.size()));
    for (const auto& t : views) {
        const auto len = get_le<std::uint32_t>(in, "tensor name");
        if (len > 256) throw FormatError("tensor name too long");
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw FormatError("model file truncated while reading tensor name");
        const auto rows = get_le<std::uint32_t>(in, "tensor rows");
        const auto cols = get_le<std::uint32_t>(in, "tensor cols");
        if (name != t.name || rows != t.rows || cols != t.cols)
            throw FormatError("tensor table mismatch at " + t.name + " (found " + name + " " + std::to_string(rows) +
                              "x" + std::to_string(cols) + ")");
    }
    for (auto& t : views) {
        for (double& v : t.values) v = get_f64(in);
    }
    return params;
}

void save_model(const std::filesystem::path& path, const ModelParameters& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_model(out, params);
}

ModelParameters load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_model(in);
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
    out << "epoch,loss_sr,loss_pf,loss_rf,loss_df,train_total,val_total,val_sr,log_sigma_sr,log_sigma_pf,log_sigma_rf,"
           "log_sigma_df\n";
    out << std::setprecision(17);
    for (const auto& r : history) {
        out << r.epoch << ',' << r.train.sr << ',' << r.train.pf << ',' << r.train.rf << ',' << r.train.df << ','
            << r.train_total << ',' << r.val_total << ',' << r.val_sr;
        for (double s : r.log_sigma) out << ',' << s;
        out << '\n';
    }
}

nlohmann::ordered_json folds_to_json(const FoldAssignment& folds) {
    nlohmann::ordered_json j;
    j["k"] = folds.k;
    nlohmann::ordered_json users = nlohmann::ordered_json::object();
    for (const auto& [user, fold] : folds.fold_of_user) users[user] = fold;
    j["fold_of_user"] = users;
    return j;
}

FoldAssignment folds_from_json(const nlohmann::json& j) {
    FoldAssignment f;
    f.k = j.at("k").get<int>();
    for (const auto& [user, fold] : j.at("fold_of_user").items()) f.fold_of_user[user] = fold.get<int>();
    return f;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace seqrisk
