#include "aam/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

namespace aam {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    if (!current.empty()) lines.push_back(current);
    return lines;
}

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

int parse_header_int(const std::string& line, const std::string& key, int line_no) {
    const std::string t = trimmed(line);
    if (t.rfind(key + ":", 0) != 0)
        throw ParseError("expected '" + key + ":' header", line_no);
    const std::string value = trimmed(t.substr(key.size() + 1));
    int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ParseError("malformed integer in '" + key + "' header", line_no);
    return out;
}

} // namespace

Shape LandmarkFile::to_shape() const {
    Shape s;
    s.points.resize(2 * static_cast<Index>(points.size()));
    for (size_t i = 0; i < points.size(); ++i) {
        s.points(2 * static_cast<Index>(i)) = points[i].first;
        s.points(2 * static_cast<Index>(i) + 1) = points[i].second;
    }
    return s;
}

LandmarkFile LandmarkFile::from_shape(const Shape& s) {
    LandmarkFile l;
    l.version = 1;
    l.n_points = static_cast<int>(s.num_points());
    l.points.reserve(l.n_points);
    for (Index i = 0; i < s.num_points(); ++i) l.points.emplace_back(s.x(i), s.y(i));
    return l;
}

LandmarkFile parse_pts(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    size_t i = 0;
    auto next_content_line = [&](const char* what) -> int {
        while (i < lines.size() && trimmed(lines[i]).empty()) ++i;
        if (i >= lines.size())
            throw ParseError(std::string("unexpected end of file, expected ") + what,
                             static_cast<int>(lines.size()));
        return static_cast<int>(++i); // 1-based line just consumed
    };

    LandmarkFile out;
    int line_no = next_content_line("'version:' header");
    out.version = parse_header_int(lines[line_no - 1], "version", line_no);
    line_no = next_content_line("'n_points:' header");
    out.n_points = parse_header_int(lines[line_no - 1], "n_points", line_no);
    if (out.n_points < 3)
        throw ParseError("n_points must be at least 3", line_no);
    line_no = next_content_line("'{'");
    if (trimmed(lines[line_no - 1]) != "{")
        throw ParseError("expected '{' opening the coordinate block", line_no);

    out.points.reserve(out.n_points);
    int last_coordinate_line = line_no;
    while (true) {
        line_no = next_content_line("coordinate or '}'");
        const std::string t = trimmed(lines[line_no - 1]);
        if (t == "}") break;
        if (static_cast<int>(out.points.size()) == out.n_points)
            throw ParseError("more coordinates than n_points declares", line_no);
        std::istringstream ss(t);
        double x = 0.0, y = 0.0;
        std::string rest;
        if (!(ss >> x >> y) || (ss >> rest))
            throw ParseError("expected 'x y' coordinate pair", line_no);
        out.points.emplace_back(x, y);
        last_coordinate_line = line_no;
    }
    if (static_cast<int>(out.points.size()) != out.n_points)
        throw ParseError("point count mismatch: n_points is " + std::to_string(out.n_points) +
                             " but the coordinate block ends after " +
                             std::to_string(out.points.size()) + " points",
                         last_coordinate_line);
    return out;
}

std::string write_pts(const LandmarkFile& l) {
    std::string out;
    char buf[80];
    out += "version: " + std::to_string(l.version) + "\n";
    out += "n_points: " + std::to_string(l.n_points) + "\n{\n";
    for (const auto& [x, y] : l.points) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", x, y);
        out += buf;
    }
    out += "}\n";
    return out;
}

Shape trim_68_to_66(const Shape& s, int index_a, int index_b) {
    if (s.num_points() != 68)
        throw DimensionError("trim_68_to_66: expected 68 points, got " +
                             std::to_string(s.num_points()));
    if (index_a == index_b || index_a < 0 || index_b < 0 || index_a >= 68 || index_b >= 68)
        throw ConfigError("trim_68_to_66: invalid removal indices");
    Shape out;
    out.points.resize(2 * 66);
    Index w = 0;
    for (Index i = 0; i < 68; ++i) {
        if (i == index_a || i == index_b) continue;
        out.points(2 * w) = s.x(i);
        out.points(2 * w + 1) = s.y(i);
        ++w;
    }
    return out;
}

std::set<std::string> DatasetManifest::subject_ids() const {
    std::set<std::string> ids;
    for (const auto& e : entries) ids.insert(e.subject_id);
    return ids;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == '\t') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

std::string subject_from_filename(const std::string& path, const std::regex& pattern) {
    const std::string stem = std::filesystem::path(path).stem().string();
    std::smatch m;
    if (std::regex_match(stem, m, pattern) && m.size() > 1) return m[1].str();
    return stem;
}

} // namespace

DatasetManifest parse_manifest(const std::string& text, const std::string& subject_pattern) {
    std::regex pattern;
    try {
        pattern = std::regex(subject_pattern);
    } catch (const std::regex_error&) {
        throw ConfigError("invalid subject pattern regex: " + subject_pattern);
    }

    DatasetManifest manifest;
    const std::vector<std::string> lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string t = trimmed(lines[i]);
        if (t.empty() || t[0] == '#') continue;
        const std::vector<std::string> fields = split_tabs(t);
        if (fields.size() != 3 && fields.size() != 4)
            throw ParseError("manifest entry needs 3 or 4 tab-separated fields",
                             static_cast<int>(i + 1));
        ManifestEntry e;
        e.image_path = fields[0];
        e.landmark_path = fields[1];
        const std::string& split_field = fields.back();
        if (fields.size() == 4) {
            e.subject_id = fields[2];
        } else {
            e.subject_id = subject_from_filename(fields[0], pattern);
        }
        if (e.subject_id.empty())
            throw ParseError("empty subject id", static_cast<int>(i + 1));
        if (split_field == "train") {
            e.split = Split::Train;
        } else if (split_field == "test") {
            e.split = Split::Test;
        } else {
            throw ParseError("split must be 'train' or 'test', got '" + split_field + "'",
                             static_cast<int>(i + 1));
        }
        if (e.image_path.empty() || e.landmark_path.empty())
            throw ParseError("empty path in manifest entry", static_cast<int>(i + 1));
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

std::string write_manifest(const DatasetManifest& manifest) {
    std::string out;
    for (const auto& e : manifest.entries) {
        out += e.image_path + "\t" + e.landmark_path + "\t" + e.subject_id + "\t" +
               (e.split == Split::Train ? "train" : "test") + "\n";
    }
    return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path,
                              const std::string& subject_pattern) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), subject_pattern);
}

std::pair<DatasetManifest, DatasetManifest>
subject_disjoint_split(const DatasetManifest& manifest, const std::set<std::string>& train_ids) {
    const std::set<std::string> known = manifest.subject_ids();
    for (const std::string& id : train_ids)
        if (!known.count(id)) throw IoError("unknown subject id in split: " + id);

    std::pair<DatasetManifest, DatasetManifest> out;
    for (const auto& e : manifest.entries) {
        ManifestEntry copy = e;
        if (train_ids.count(e.subject_id)) {
            copy.split = Split::Train;
            out.first.entries.push_back(std::move(copy));
        } else {
            copy.split = Split::Test;
            out.second.entries.push_back(std::move(copy));
        }
    }
    return out;
}

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path.string());

    auto next_token = [&in, &path]() -> std::string {
        std::string token;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                while (in.get(c) && c != '\n') {}
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!token.empty()) return token;
                continue;
            }
            token.push_back(c);
        }
        if (token.empty()) throw IoError("truncated PGM header: " + path.string());
        return token;
    };

    if (next_token() != "P5") throw IoError("not a binary PGM (P5): " + path.string());
    const int width = std::stoi(next_token());
    const int height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (width < 1 || height < 1 || maxval < 1 || maxval > 65535)
        throw IoError("invalid PGM dimensions: " + path.string());

    Image img(width, height);
    const size_t n = static_cast<size_t>(width) * height;
    if (maxval < 256) {
        std::vector<unsigned char> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw IoError("truncated PGM payload: " + path.string());
        for (size_t i = 0; i < n; ++i)
            img.data()[i] = buf[i] / static_cast<double>(maxval);
    } else {
        std::vector<unsigned char> buf(2 * n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
        if (static_cast<size_t>(in.gcount()) != 2 * n)
            throw IoError("truncated PGM payload: " + path.string());
        for (size_t i = 0; i < n; ++i) {
            const unsigned value = (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1];
            img.data()[i] = value / static_cast<double>(maxval);
        }
    }
    return img;
}

void write_pgm(const Image& image, const std::filesystem::path& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw ConfigError("write_pgm: bit depth must be 8 or 16");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path.string());
    const int maxval = bit_depth == 8 ? 255 : 65535;
    out << "P5\n" << image.width() << " " << image.height() << "\n" << maxval << "\n";
    for (double v : image.data()) {
        const long q = std::lround(std::clamp(v, 0.0, 1.0) * maxval);
        if (bit_depth == 8) {
            out.put(static_cast<char>(q));
        } else {
            out.put(static_cast<char>((q >> 8) & 0xff));
            out.put(static_cast<char>(q & 0xff));
        }
    }
    if (!out) throw IoError("failed writing image: " + path.string());
}

std::vector<Example> load_examples(const DatasetManifest& manifest, Split split,
                                   const std::filesystem::path& root,
                                   const LoadOptions& options) {
    auto resolve = [&root](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : root / fp;
    };
    std::vector<Example> examples;
    for (const auto& e : manifest.entries) {
        if (e.split != split) continue;
        Example ex;
        ex.id = e.subject_id + "/" + std::filesystem::path(e.image_path).stem().string();
        ex.image = read_pgm(resolve(e.image_path));
        std::ifstream in(resolve(e.landmark_path));
        if (!in) throw IoError("cannot open landmarks: " + e.landmark_path);
        std::stringstream ss;
        ss << in.rdbuf();
        Shape s = parse_pts(ss.str()).to_shape();
        if (options.trim_68_to_66)
            s = trim_68_to_66(s, options.trim_index_a, options.trim_index_b);
        ex.shape = std::move(s);
        examples.push_back(std::move(ex));
    }
    return examples;
}

// ---------------------------------------------------------------------------
// Model container
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'A', 'A', 'M', 'T', 'L', 'M', 'D', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct Writer {
    std::string buf;

    void raw(const void* p, size_t n) { buf.append(static_cast<const char*>(p), n); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void vec(const Vector& v) {
        u64(static_cast<std::uint64_t>(v.size()));
        for (Index i = 0; i < v.size(); ++i) f64(v(i));
    }
    void mat(const Matrix& m) { // row-major payload
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        for (Index r = 0; r < m.rows(); ++r)
            for (Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
};

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    void raw(void* p, size_t n) {
        if (pos + n > buf.size())
            throw SerializationError(SerializationError::Kind::Truncated,
                                     "model file ends prematurely");
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, 8);
        return v;
    }
    double f64() {
        double v;
        raw(&v, 8);
        return v;
    }
    std::uint64_t count(std::uint64_t limit) {
        const std::uint64_t n = u64();
        if (n > limit)
            throw SerializationError(SerializationError::Kind::Malformed,
                                     "implausible element count in model file");
        return n;
    }
    Vector vec() {
        const std::uint64_t n = count(1u << 28);
        Vector v(static_cast<Index>(n));
        for (std::uint64_t i = 0; i < n; ++i) v(static_cast<Index>(i)) = f64();
        return v;
    }
    Matrix mat() {
        const std::uint64_t r = count(1u << 28);
        const std::uint64_t c = count(1u << 28);
        if (r * c > (1ull << 32))
            throw SerializationError(SerializationError::Kind::Malformed,
                                     "implausible matrix size in model file");
        Matrix m(static_cast<Index>(r), static_cast<Index>(c));
        for (std::uint64_t i = 0; i < r; ++i)
            for (std::uint64_t j = 0; j < c; ++j)
                m(static_cast<Index>(i), static_cast<Index>(j)) = f64();
        return m;
    }
};

void write_mask_rle(Writer& w, const std::vector<std::uint8_t>& mask) {
    // Alternating run lengths, first run counts zeros (possibly 0).
    std::vector<std::uint64_t> runs;
    std::uint8_t current = 0;
    std::uint64_t length = 0;
    for (std::uint8_t m : mask) {
        const std::uint8_t bit = m ? 1 : 0;
        if (bit == current) {
            ++length;
        } else {
            runs.push_back(length);
            current = bit;
            length = 1;
        }
    }
    runs.push_back(length);
    w.u64(runs.size());
    for (std::uint64_t r : runs) w.u64(r);
}

std::vector<std::uint8_t> read_mask_rle(Reader& r, size_t expected_size) {
    const std::uint64_t n_runs = r.count(1u << 26);
    std::vector<std::uint8_t> mask;
    mask.reserve(expected_size);
    std::uint8_t bit = 0;
    for (std::uint64_t i = 0; i < n_runs; ++i) {
        const std::uint64_t len = r.count(expected_size);
        mask.insert(mask.end(), static_cast<size_t>(len), bit);
        bit = bit ? 0 : 1;
    }
    if (mask.size() != expected_size)
        throw SerializationError(SerializationError::Kind::Malformed,
                                 "mask run lengths do not cover the raster");
    return mask;
}

} // namespace

void save_model(const AamModel& model, const std::filesystem::path& path) {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(model.label));

    // Shape model
    w.u64(static_cast<std::uint64_t>(model.shape.num_points()));
    w.u64(static_cast<std::uint64_t>(model.shape.n_global));
    w.vec(model.shape.mean.points);
    w.mat(model.shape.basis.columns);
    w.vec(model.shape.eigenvalues);

    // Appearance model and its frame
    const ReferenceFrame& frame = model.appearance.frame;
    w.u32(static_cast<std::uint32_t>(frame.width));
    w.u32(static_cast<std::uint32_t>(frame.height));
    w.vec(frame.mesh.vertices.points);
    w.u64(frame.mesh.triangles.size());
    for (const auto& t : frame.mesh.triangles) {
        w.u32(static_cast<std::uint32_t>(t[0]));
        w.u32(static_cast<std::uint32_t>(t[1]));
        w.u32(static_cast<std::uint32_t>(t[2]));
    }
    write_mask_rle(w, frame.mask);
    w.vec(model.appearance.mean);
    w.mat(model.appearance.basis.columns);
    w.vec(model.appearance.eigenvalues);

    const std::uint64_t checksum = fnv1a(w.buf);
    w.u64(checksum);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model: " + path.string());
    out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    if (!out) throw IoError("failed writing model: " + path.string());
}

AamModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();

    if (bytes.size() < sizeof(kMagic) + 4 + 8)
        throw SerializationError(SerializationError::Kind::Truncated,
                                 "model file too small: " + path.string());
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw SerializationError(SerializationError::Kind::BadMagic,
                                 "not a model file: " + path.string());

    std::uint32_t version;
    std::memcpy(&version, bytes.data() + sizeof(kMagic), 4);
    if (version > kFormatVersion)
        throw SerializationError(SerializationError::Kind::VersionMismatch,
                                 "model format version " + std::to_string(version) +
                                     " is newer than supported version " +
                                     std::to_string(kFormatVersion));

    const std::string payload = bytes.substr(0, bytes.size() - 8);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    if (fnv1a(payload) != stored)
        throw SerializationError(SerializationError::Kind::ChecksumMismatch,
                                 "model file checksum mismatch: " + path.string());

    Reader r{payload, sizeof(kMagic) + 4};
    AamModel model;
    model.label = static_cast<ModelLabel>(r.u32());

    const std::uint64_t v = r.count(1u << 20);
    model.shape.n_global = static_cast<Index>(r.count(64));
    model.shape.mean = Shape(r.vec());
    model.shape.basis.columns = r.mat();
    model.shape.eigenvalues = r.vec();
    if (model.shape.mean.points.size() != static_cast<Index>(2 * v) ||
        model.shape.basis.dim() != static_cast<Index>(2 * v))
        throw SerializationError(SerializationError::Kind::Malformed,
                                 "inconsistent shape dimensions in model file");

    ReferenceFrame frame;
    frame.width = static_cast<int>(r.u32());
    frame.height = static_cast<int>(r.u32());
    if (frame.width < 1 || frame.height < 1 || frame.width > (1 << 16) ||
        frame.height > (1 << 16))
        throw SerializationError(SerializationError::Kind::Malformed,
                                 "invalid frame raster in model file");
    frame.mesh.vertices = Shape(r.vec());
    const std::uint64_t n_tri = r.count(1u << 20);
    frame.mesh.triangles.reserve(n_tri);
    for (std::uint64_t i = 0; i < n_tri; ++i) {
        std::array<int, 3> t;
        for (int j = 0; j < 3; ++j) {
            t[j] = static_cast<int>(r.u32());
            if (t[j] < 0 || t[j] >= static_cast<int>(v))
                throw SerializationError(SerializationError::Kind::Malformed,
                                         "triangle index out of range in model file");
        }
        frame.mesh.triangles.push_back(t);
    }
    frame.mask = read_mask_rle(r, static_cast<size_t>(frame.width) * frame.height);
    frame.rebuild_lookup();

    model.appearance.frame = std::move(frame);
    model.appearance.mean = r.vec();
    model.appearance.basis.columns = r.mat();
    model.appearance.eigenvalues = r.vec();
    if (model.appearance.mean.size() != model.appearance.frame.L)
        throw SerializationError(SerializationError::Kind::Malformed,
                                 "appearance length does not match frame mask");
    if (r.pos != payload.size())
        throw SerializationError(SerializationError::Kind::Malformed,
                                 "trailing bytes in model file");
    return model;
}

} // namespace aam
