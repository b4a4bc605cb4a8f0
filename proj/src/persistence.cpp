#include "ugodit/persistence.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ugodit/error.hpp"

namespace ugodit {

namespace {

constexpr std::array<char, 8> kArrayMagic{'U', 'G', 'D', 'A', 'R', 'R', 'A', 'Y'};
constexpr std::array<char, 8> kCheckpointMagic{'U', 'G', 'O', 'D', 'I', 'T', 'C', 'K'};
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <class T> void put(std::ostream &out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<unsigned char>((static_cast<std::make_unsigned_t<T>>(value) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

void put_f64(std::ostream &out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::ostream &out, const std::string &s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T> T get(std::istream &in, const char *what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char *>(bytes), sizeof(T)))
    throw FormatError(std::string("truncated file while reading ") + what);
  std::make_unsigned_t<T> v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::make_unsigned_t<T>>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

double get_f64(std::istream &in, const char *what) { return std::bit_cast<double>(get<std::uint64_t>(in, what)); }

std::string get_string(std::istream &in, const char *what, std::uint32_t limit = 1u << 20) {
  const auto n = get<std::uint32_t>(in, what);
  if (n > limit)
    throw FormatError(std::string("implausible length for ") + what);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n))
    throw FormatError(std::string("truncated file while reading ") + what);
  return s;
}

void expect_magic(std::istream &in, const std::array<char, 8> &magic, const char *what) {
  std::array<char, 8> got{};
  if (!in.read(got.data(), 8) || got != magic)
    throw FormatError(std::string("not a ") + what + " (bad magic)");
}

std::string layer_name(std::size_t level, const char *part) {
  return "encoder.level" + std::to_string(level) + "." + part;
}

} // namespace

void write_array(std::ostream &out, const Tensor &t) {
  out.write(kArrayMagic.data(), 8);
  put(out, kArrayVersion);
  put(out, kDtypeFloat32);
  put(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape())
    put(out, static_cast<std::uint64_t>(d));
  for (double v : t.values())
    put(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

Tensor read_array(std::istream &in) {
  expect_magic(in, kArrayMagic, "UGDARRAY array");
  const auto version = get<std::uint32_t>(in, "array version");
  if (version > kArrayVersion)
    throw VersionError("array container version " + std::to_string(version) + " is newer than supported " +
                       std::to_string(kArrayVersion));
  const auto dtype = get<std::uint32_t>(in, "array dtype");
  if (dtype != kDtypeFloat32)
    throw FormatError("unsupported array dtype tag " + std::to_string(dtype));
  const auto rank = get<std::uint32_t>(in, "array rank");
  if (rank > 8)
    throw FormatError("implausible array rank " + std::to_string(rank));
  Shape shape;
  std::uint64_t total = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const auto d = get<std::uint64_t>(in, "array dims");
    if (d != 0 && total > kMaxElements / d)
      throw FormatError("array too large");
    total *= d;
    shape.push_back(static_cast<std::size_t>(d));
  }
  std::vector<double> data(static_cast<std::size_t>(total));
  for (auto &v : data)
    v = static_cast<double>(std::bit_cast<float>(get<std::uint32_t>(in, "array data")));
  return Tensor(std::move(shape), std::move(data));
}

void save_array(const std::filesystem::path &path, const Tensor &t) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot write " + path.string());
  write_array(out, t);
  if (!out)
    throw InputError("failed writing " + path.string());
}

Tensor load_array(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path.string());
  return read_array(in);
}

void save_checkpoint(const EncoderParams &phi, const CheckpointMeta &meta, const std::filesystem::path &path) {
  meta.spec.validate();
  if (phi.fingerprint != meta.spec.fingerprint())
    throw ArchitectureError("encoder does not belong to the architecture being saved");
  std::ostringstream out(std::ios::binary);
  out.write(kCheckpointMagic.data(), 8);
  put(out, kCheckpointVersion);
  put_string(out, meta.spec.canonical());
  put(out, meta.spec.fingerprint());
  put_string(out, meta.task);
  put(out, meta.train_count);
  put_f64(out, meta.lambda);
  put(out, meta.K);
  put(out, meta.N);
  put(out, meta.seed);
  put(out, static_cast<std::uint32_t>(2 * phi.layers.size()));
  for (std::size_t l = 0; l < phi.layers.size(); ++l) {
    put_string(out, layer_name(l, "weight"));
    write_array(out, phi.layers[l].weight);
    put_string(out, layer_name(l, "bias"));
    write_array(out, phi.layers[l].bias);
  }
  // Write to a sibling file first so a failed save never leaves a torn checkpoint.
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file)
      throw InputError("cannot write checkpoint " + path.string());
    const std::string bytes = out.str();
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!file)
      throw InputError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream file(path, std::ios::binary);
  if (!file)
    throw InputError("cannot open checkpoint " + path.string());
  std::stringstream in(std::ios::in | std::ios::out | std::ios::binary);
  in << file.rdbuf();

  expect_magic(in, kCheckpointMagic, "UGODITCK checkpoint");
  const auto version = get<std::uint32_t>(in, "checkpoint version");
  if (version > kCheckpointVersion)
    throw VersionError("checkpoint version " + std::to_string(version) + " is newer than this reader (" +
                       std::to_string(kCheckpointVersion) + ")");
  if (version == 0)
    throw FormatError("checkpoint version 0 is invalid");

  Checkpoint ck;
  const std::string canonical = get_string(in, "architecture");
  try {
    ck.meta.spec = ArchitectureSpec::parse_canonical(canonical);
  } catch (const Error &e) {
    throw FormatError(std::string("unreadable architecture in checkpoint: ") + e.what());
  }
  const auto stored_fp = get<std::uint64_t>(in, "fingerprint");
  if (stored_fp != ck.meta.spec.fingerprint())
    throw IntegrityError("checkpoint fingerprint " + std::to_string(stored_fp) +
                         " does not match its architecture (" + std::to_string(ck.meta.spec.fingerprint()) + ")");
  ck.meta.task = get_string(in, "task", 64);
  ck.meta.train_count = get<std::uint64_t>(in, "M");
  ck.meta.lambda = get_f64(in, "lambda");
  ck.meta.K = get<std::int64_t>(in, "K");
  ck.meta.N = get<std::int64_t>(in, "N");
  ck.meta.seed = get<std::uint64_t>(in, "seed");

  // The expected layout comes from a freshly built encoder of the same spec.
  EncoderParams expected = init_encoder(ck.meta.spec, 0.0, 0);
  const auto count = get<std::uint32_t>(in, "array count");
  if (count != 2 * expected.layers.size())
    throw IntegrityError("checkpoint holds " + std::to_string(count) + " arrays, architecture needs " +
                         std::to_string(2 * expected.layers.size()));
  ck.phi = expected;
  for (std::size_t l = 0; l < expected.layers.size(); ++l) {
    for (const char *part : {"weight", "bias"}) {
      const std::string name = get_string(in, "array name", 256);
      if (name != layer_name(l, part))
        throw IntegrityError("unexpected array '" + name + "' (wanted " + layer_name(l, part) + ")");
      Tensor t = read_array(in);
      Tensor &slot = std::string(part) == "weight" ? ck.phi.layers[l].weight : ck.phi.layers[l].bias;
      if (t.shape() != slot.shape())
        throw IntegrityError("array " + name + " has shape " + shape_string(t.shape()) + ", architecture needs " +
                             shape_string(slot.shape()));
      if (!t.all_finite())
        throw CorruptionError("array " + name + " contains non-finite values");
      slot = std::move(t);
    }
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes after checkpoint payload");
  return ck;
}

} // namespace ugodit
