#include "fvein/bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "fvein/error.hpp"

namespace fvein {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

FeatureBank ModelBundle::feature_bank() const {
    return build_feature_bank(autoencoder, whitening, patch_side);
}

void ModelBundle::validate() const {
    if (format_version != kBundleVersion)
        fail(ErrorKind::UnsupportedVersion, "bundle version " + std::to_string(format_version) +
                                                " is not supported (reader supports " +
                                                std::to_string(kBundleVersion) + ")");
    autoencoder.validate();
    require(whitening.input_dim == patch_side * patch_side,
            "bundle: whitening input dim does not match patch_side");
    require(autoencoder.input_dim() == whitening.retained_dim,
            "bundle: autoencoder input dim does not match whitening");
    require(pool_rows >= 1 && pool_cols >= 1, "bundle: pool grid must be positive");
    const int dim = autoencoder.hidden_dim() * pool_rows * pool_cols;
    for (const auto& [id, m] : user_models) {
        require(id == m.user_id, "bundle: user model key mismatch for '" + id + "'");
        require(m.dim() == dim && m.inverse_variance.size() == dim,
                "bundle: model for '" + id + "' has wrong dimension");
    }
}

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    void vec(const Vector& v) {
        u64(static_cast<std::uint64_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
    }
    void mat(const Matrix& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
    void section(const Writer& payload) {
        u64(payload.buf_.size());
        buf_.insert(buf_.end(), payload.buf_.begin(), payload.buf_.end());
    }
    const std::vector<std::uint8_t>& bytes() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size, std::string section)
        : data_(data), size_(size), section_(std::move(section)) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const auto n = u64();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    Vector vec() {
        const auto n = u64();
        need_elements(n);
        Vector v(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
        return v;
    }
    Matrix mat() {
        const auto rows = u64();
        const auto cols = u64();
        if (cols != 0 && rows > (size_ / 8) / cols) truncated();
        need_elements(rows * cols);
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
        return m;
    }
    Reader section(const std::string& name) {
        if (size_ - pos_ < 8) fail(ErrorKind::Corruption, "bundle truncated in section '" + name + "'");
        const auto n = u64();
        if (n > size_ - pos_)
            fail(ErrorKind::Corruption, "bundle truncated in section '" + name + "'");
        Reader sub(data_ + pos_, n, name);
        pos_ += n;
        return sub;
    }
    void finish() const {
        if (pos_ != size_) fail(ErrorKind::Corruption, "bundle section '" + section_ + "' has trailing bytes");
    }
    std::size_t position() const { return pos_; }

private:
    [[noreturn]] void truncated() const {
        fail(ErrorKind::Corruption, "bundle truncated in section '" + section_ + "'");
    }
    void need(std::uint64_t n) const {
        if (n > size_ - pos_) truncated();
    }
    void need_elements(std::uint64_t n) const {
        if (n > (size_ - pos_) / 8) truncated();
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::string section_;
    std::size_t pos_ = 0;
};

void write_optional(Writer& w, const std::optional<double>& v) {
    w.u8(v ? 1 : 0);
    w.f64(v.value_or(0.0));
}

std::optional<double> read_optional(Reader& r) {
    const auto present = r.u8();
    const double v = r.f64();
    if (present > 1) fail(ErrorKind::Corruption, "bundle: invalid optional flag");
    return present ? std::optional<double>(v) : std::nullopt;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
    bundle.validate();
    Writer out;
    out.u8('F');
    out.u8('V');
    out.u8('A');
    out.u8('B');
    out.u32(bundle.format_version);

    Writer config;
    config.str(serialize_pipeline_config(bundle.config));
    out.section(config);

    Writer enh;
    enh.u8(bundle.enhancement ? 1 : 0);
    if (bundle.enhancement) {
        enh.u64(bundle.enhancement->size());
        for (const auto& p : bundle.enhancement->points()) {
            enh.f64(p.in);
            enh.f64(p.out);
        }
    }
    out.section(enh);

    Writer wh;
    wh.i64(bundle.whitening.input_dim);
    wh.i64(bundle.whitening.retained_dim);
    wh.f64(bundle.whitening.epsilon);
    wh.vec(bundle.whitening.mean);
    wh.mat(bundle.whitening.projection);
    wh.vec(bundle.whitening.eigenvalues);
    out.section(wh);

    Writer ae;
    ae.mat(bundle.autoencoder.w1);
    ae.vec(bundle.autoencoder.b1);
    ae.mat(bundle.autoencoder.w2);
    ae.vec(bundle.autoencoder.b2);
    out.section(ae);

    Writer meta;
    meta.i64(bundle.patch_side);
    meta.i64(bundle.pool_rows);
    meta.i64(bundle.pool_cols);
    out.section(meta);

    Writer users;
    users.u64(bundle.user_models.size());
    for (const auto& [id, m] : bundle.user_models) {
        users.str(m.user_id);
        users.vec(m.mean);
        users.vec(m.inverse_variance);
        users.f64(m.log_det);
        users.f64(m.regularizer);
        write_optional(users, m.threshold);
    }
    out.section(users);

    Writer thr;
    write_optional(thr, bundle.global_threshold);
    out.section(thr);

    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorKind::Io, "cannot write bundle '" + path.string() + "'");
        f.write(reinterpret_cast<const char*>(out.bytes().data()),
                static_cast<std::streamsize>(out.bytes().size()));
        if (!f) fail(ErrorKind::Io, "write failed for bundle '" + path.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::Io, "cannot move bundle into place at '" + path.string() + "': " + ec.message());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot open bundle '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};

    Reader in(bytes.data(), bytes.size(), "header");
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "FVAB", 4) != 0)
        fail(ErrorKind::Corruption, "'" + path.string() + "' is not a model bundle (bad magic)");
    for (int i = 0; i < 4; ++i) in.u8();
    ModelBundle b;
    b.format_version = in.u32();
    if (b.format_version != kBundleVersion)
        fail(ErrorKind::UnsupportedVersion, "bundle version " + std::to_string(b.format_version) +
                                                " is not supported (reader supports " +
                                                std::to_string(kBundleVersion) + ")");

    {
        Reader s = in.section("config");
        b.config = parse_pipeline_config(s.str());
        s.finish();
    }
    {
        Reader s = in.section("enhancement");
        if (s.u8()) {
            const auto n = s.u64();
            if (n > 1'000'000) fail(ErrorKind::Corruption, "bundle: implausible curve size");
            std::vector<RemapCurve::Point> pts(n);
            for (auto& p : pts) {
                p.in = s.f64();
                p.out = s.f64();
            }
            b.enhancement = RemapCurve(std::move(pts));
        }
        s.finish();
    }
    {
        Reader s = in.section("whitening");
        b.whitening.input_dim = static_cast<int>(s.i64());
        b.whitening.retained_dim = static_cast<int>(s.i64());
        b.whitening.epsilon = s.f64();
        b.whitening.mean = s.vec();
        b.whitening.projection = s.mat();
        b.whitening.eigenvalues = s.vec();
        s.finish();
    }
    {
        Reader s = in.section("autoencoder");
        b.autoencoder.w1 = s.mat();
        b.autoencoder.b1 = s.vec();
        b.autoencoder.w2 = s.mat();
        b.autoencoder.b2 = s.vec();
        s.finish();
    }
    {
        Reader s = in.section("bank_meta");
        b.patch_side = static_cast<int>(s.i64());
        b.pool_rows = static_cast<int>(s.i64());
        b.pool_cols = static_cast<int>(s.i64());
        s.finish();
    }
    {
        Reader s = in.section("user_models");
        const auto n = s.u64();
        for (std::uint64_t i = 0; i < n; ++i) {
            GaussianModel m;
            m.user_id = s.str();
            m.mean = s.vec();
            m.inverse_variance = s.vec();
            m.log_det = s.f64();
            m.regularizer = s.f64();
            m.threshold = read_optional(s);
            const std::string id = m.user_id;
            b.user_models.emplace(id, std::move(m));
        }
        s.finish();
    }
    {
        Reader s = in.section("global_threshold");
        b.global_threshold = read_optional(s);
        s.finish();
    }
    in.finish();
    try {
        b.validate();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidInput) fail(ErrorKind::Corruption, std::string("bundle: ") + e.what());
        throw;
    }
    return b;
}

}  // namespace fvein
