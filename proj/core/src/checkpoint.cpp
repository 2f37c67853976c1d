#include "sants/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sants/checksum.hpp"
#include "sants/config.hpp"

namespace sants {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'N', 'T', 'S', 'N', 'E', 'T'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t uint(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::string_view take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw DataError("checkpoint truncated");
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const SchedulerNet& net) {
    std::string out(kMagic, sizeof kMagic);
    put_u32(out, kCheckpointVersion);
    const std::string_view act = SchedulerNet::kActivation;
    put_u32(out, static_cast<std::uint32_t>(act.size()));
    out.append(act);
    put_u32(out, static_cast<std::uint32_t>(net.shape().input));
    put_u32(out, static_cast<std::uint32_t>(net.shape().hidden1));
    put_u32(out, static_cast<std::uint32_t>(net.shape().hidden2));
    put_u64(out, net.parameter_count());
    for (double p : net.params()) put_u64(out, std::bit_cast<std::uint64_t>(p));
    put_u32(out, crc32(out));
    return out;
}

SchedulerNet parse_checkpoint(std::string_view bytes, const std::optional<NetShape>& expected) {
    if (bytes.size() < sizeof kMagic + 4) throw DataError("checkpoint truncated");
    const auto body = bytes.substr(0, bytes.size() - 4);
    Reader trailer(bytes.substr(bytes.size() - 4));
    if (static_cast<std::uint32_t>(trailer.uint(4)) != crc32(body)) throw DataError("checkpoint checksum mismatch");

    Reader r(body);
    if (r.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) throw DataError("checkpoint: bad magic");
    if (r.uint(4) != kCheckpointVersion) throw DataError("checkpoint: unsupported format version");
    const auto act_len = r.uint(4);
    if (r.take(act_len) != SchedulerNet::kActivation) throw DataError("checkpoint: activation mismatch");
    NetShape shape;
    shape.input = static_cast<int>(r.uint(4));
    shape.hidden1 = static_cast<int>(r.uint(4));
    shape.hidden2 = static_cast<int>(r.uint(4));
    if (expected && !(shape == *expected)) throw DataError("checkpoint: layer dimensions do not match");
    SchedulerNet net(shape);
    const auto count = r.uint(8);
    if (count != net.parameter_count()) throw DataError("checkpoint: parameter count mismatch");
    auto params = net.mutable_params();
    for (std::size_t i = 0; i < count; ++i) params[i] = std::bit_cast<double>(r.uint(8));
    if (r.pos() != body.size()) throw DataError("checkpoint: trailing bytes");
    return net;
}

void save_checkpoint(const std::filesystem::path& path, const SchedulerNet& net) {
    write_file_atomic(path, serialize_checkpoint(net));
}

SchedulerNet load_checkpoint(const std::filesystem::path& path, const std::optional<NetShape>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str(), expected);
}

}  // namespace sants
