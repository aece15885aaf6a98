#include "hikonv/qtensor.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "hikonv/bitpack.hpp"
#include "hikonv/errors.hpp"

namespace hikonv {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'S', 'R'};
constexpr std::uint8_t kVersion = 1;
constexpr int kMaxNdim = 4;
// Defensive cap: a corrupt header must not drive a huge allocation.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 28;

std::uint64_t element_count(const QTensor& t) {
  std::uint64_t count = 1;
  for (std::uint32_t d : t.dims) {
    if (d == 0) throw RangeError("tensor dimensions must be positive");
    count *= d;
    if (count > kMaxElements) throw RangeError("tensor too large");
  }
  return count;
}

void validate_qtensor(const QTensor& t) {
  if (t.dims.empty() || t.dims.size() > kMaxNdim) {
    throw RangeError("tensor rank must be in [1, 4]");
  }
  if (t.bitwidth != 32 && (t.bitwidth < 1 || t.bitwidth > 8)) {
    throw RangeError("bitwidth must be in [1, 8] or 32");
  }
  if (t.bitwidth == 1 && t.is_signed) {
    throw RangeError(
        "bitwidth 1 cannot be signed; binary data uses unsigned {0, 1}");
  }
  const std::uint64_t count = element_count(t);
  if (t.values.size() != count) {
    throw RangeError("value count does not match tensor dimensions");
  }
  const std::int64_t lo = min_value(t.bitwidth, t.is_signed);
  const std::int64_t hi = max_value(t.bitwidth, t.is_signed);
  for (std::int64_t v : t.values) {
    if (v < lo || v > hi) {
      std::ostringstream msg;
      msg << "value " << v << " outside the " << t.bitwidth << "-bit range";
      throw RangeError(msg.str());
    }
  }
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {
      static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
      static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

// Reads exactly n bytes, in bounded chunks so a corrupt header cannot force
// a large allocation before truncation is detected.
std::vector<std::uint8_t> read_exact(std::istream& in, std::uint64_t n,
                                     const char* what) {
  std::vector<std::uint8_t> buf;
  constexpr std::uint64_t kChunk = 1 << 16;
  while (buf.size() < n) {
    const std::uint64_t want = std::min(kChunk, n - buf.size());
    const std::size_t old = buf.size();
    buf.resize(old + want);
    in.read(reinterpret_cast<char*>(buf.data() + old),
            static_cast<std::streamsize>(want));
    if (static_cast<std::uint64_t>(in.gcount()) != want) {
      std::ostringstream msg;
      msg << "stream ended inside the " << what;
      throw TruncatedStream(msg.str());
    }
  }
  return buf;
}

}  // namespace

std::size_t write_qtensor(std::ostream& out, const QTensor& tensor) {
  validate_qtensor(tensor);
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  out.put(static_cast<char>(tensor.bitwidth));
  out.put(static_cast<char>(tensor.is_signed ? 1 : 0));
  out.put(static_cast<char>(tensor.dims.size()));
  for (std::uint32_t d : tensor.dims) write_u32le(out, d);
  std::size_t written = 8 + 4 * tensor.dims.size();

  if (tensor.bitwidth == 32) {
    for (std::int64_t v : tensor.values) {
      write_u32le(out, static_cast<std::uint32_t>(
                           static_cast<std::int32_t>(v)));
    }
    written += 4 * tensor.values.size();
  } else {
    QuantSeq seq;
    seq.values = tensor.values;
    seq.bitwidth = tensor.bitwidth;
    seq.is_signed = tensor.is_signed;
    const std::vector<std::uint8_t> payload = compress_bits(seq);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    written += payload.size();
  }
  if (!out) throw IoError("write failed");
  return written;
}

std::size_t write_qtensor(const std::string& path, const QTensor& tensor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::size_t written = write_qtensor(out, tensor);
  out.flush();
  if (!out) throw IoError("write failed: " + path);
  return written;
}

QTensor read_qtensor(std::istream& in) {
  const std::vector<std::uint8_t> head = read_exact(in, 8, "header");
  for (int i = 0; i < 4; ++i) {
    if (static_cast<char>(head[static_cast<std::size_t>(i)]) != kMagic[i]) {
      throw BadMagic("not a QTSR stream");
    }
  }
  if (head[4] != kVersion) {
    std::ostringstream msg;
    msg << "unsupported version " << static_cast<int>(head[4]);
    throw BadVersion(msg.str());
  }
  QTensor t;
  t.bitwidth = head[5];
  if (t.bitwidth != 32 && (t.bitwidth < 1 || t.bitwidth > 8)) {
    throw RangeError("bitwidth must be in [1, 8] or 32");
  }
  if (head[6] > 1) throw RangeError("signed flag must be 0 or 1");
  t.is_signed = head[6] == 1;
  if (t.bitwidth == 1 && t.is_signed) {
    throw RangeError(
        "bitwidth 1 cannot be signed; binary data uses unsigned {0, 1}");
  }
  const int ndim = head[7];
  if (ndim < 1 || ndim > kMaxNdim) {
    throw RangeError("tensor rank must be in [1, 4]");
  }

  const std::vector<std::uint8_t> dim_bytes =
      read_exact(in, 4 * static_cast<std::uint64_t>(ndim), "dimension list");
  std::uint64_t count = 1;
  for (int i = 0; i < ndim; ++i) {
    const std::size_t off = 4 * static_cast<std::size_t>(i);
    const std::uint32_t d =
        static_cast<std::uint32_t>(dim_bytes[off]) |
        (static_cast<std::uint32_t>(dim_bytes[off + 1]) << 8) |
        (static_cast<std::uint32_t>(dim_bytes[off + 2]) << 16) |
        (static_cast<std::uint32_t>(dim_bytes[off + 3]) << 24);
    if (d == 0) throw RangeError("tensor dimensions must be positive");
    t.dims.push_back(d);
    count *= d;
    if (count > kMaxElements) throw RangeError("tensor too large");
  }

  if (t.bitwidth == 32) {
    const std::vector<std::uint8_t> payload =
        read_exact(in, 4 * count, "payload");
    t.values.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::size_t off = 4 * static_cast<std::size_t>(i);
      const std::uint32_t u =
          static_cast<std::uint32_t>(payload[off]) |
          (static_cast<std::uint32_t>(payload[off + 1]) << 8) |
          (static_cast<std::uint32_t>(payload[off + 2]) << 16) |
          (static_cast<std::uint32_t>(payload[off + 3]) << 24);
      t.values.push_back(static_cast<std::int32_t>(u));
    }
  } else {
    const std::uint64_t payload_bytes =
        (count * static_cast<std::uint64_t>(t.bitwidth) + 7) / 8;
    const std::vector<std::uint8_t> payload =
        read_exact(in, payload_bytes, "payload");
    const QuantSeq seq =
        decompress_bits(payload, t.bitwidth, count, t.is_signed);
    t.values = seq.values;
  }
  return t;
}

QTensor read_qtensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return read_qtensor(in);
}

QTensor to_qtensor(const QuantSeq& seq) {
  validate_seq(seq);
  if (seq.values.empty()) throw RangeError("sequence must be nonempty");
  QTensor t;
  t.dims = {static_cast<std::uint32_t>(seq.values.size())};
  t.values = seq.values;
  t.bitwidth = seq.bitwidth;
  t.is_signed = seq.is_signed;
  return t;
}

QTensor to_qtensor(const Tensor3& tensor) {
  validate_tensor(tensor);
  QTensor t;
  t.dims = {static_cast<std::uint32_t>(tensor.channels),
            static_cast<std::uint32_t>(tensor.height),
            static_cast<std::uint32_t>(tensor.width)};
  t.values = tensor.data;
  t.bitwidth = tensor.bitwidth;
  t.is_signed = tensor.is_signed;
  return t;
}

QTensor to_qtensor(const Tensor4& tensor) {
  validate_tensor(tensor);
  QTensor t;
  t.dims = {static_cast<std::uint32_t>(tensor.out_channels),
            static_cast<std::uint32_t>(tensor.in_channels),
            static_cast<std::uint32_t>(tensor.ksize),
            static_cast<std::uint32_t>(tensor.ksize)};
  t.values = tensor.data;
  t.bitwidth = tensor.bitwidth;
  t.is_signed = tensor.is_signed;
  return t;
}

QuantSeq to_seq(const QTensor& tensor) {
  if (tensor.dims.size() != 1) {
    throw ShapeMismatch("expected a rank-1 tensor");
  }
  QuantSeq seq;
  seq.values = tensor.values;
  seq.bitwidth = tensor.bitwidth;
  seq.is_signed = tensor.is_signed;
  validate_seq(seq);
  return seq;
}

Tensor3 to_tensor3(const QTensor& tensor) {
  if (tensor.dims.size() != 3) {
    throw ShapeMismatch("expected a rank-3 tensor");
  }
  Tensor3 t;
  t.channels = static_cast<int>(tensor.dims[0]);
  t.height = static_cast<int>(tensor.dims[1]);
  t.width = static_cast<int>(tensor.dims[2]);
  t.data = tensor.values;
  t.bitwidth = tensor.bitwidth;
  t.is_signed = tensor.is_signed;
  validate_tensor(t);
  return t;
}

Tensor4 to_tensor4(const QTensor& tensor) {
  if (tensor.dims.size() != 4) {
    throw ShapeMismatch("expected a rank-4 tensor");
  }
  if (tensor.dims[2] != tensor.dims[3]) {
    throw ShapeMismatch("weight kernels must be square");
  }
  Tensor4 t;
  t.out_channels = static_cast<int>(tensor.dims[0]);
  t.in_channels = static_cast<int>(tensor.dims[1]);
  t.ksize = static_cast<int>(tensor.dims[2]);
  t.data = tensor.values;
  t.bitwidth = tensor.bitwidth;
  t.is_signed = tensor.is_signed;
  validate_tensor(t);
  return t;
}

}  // namespace hikonv
