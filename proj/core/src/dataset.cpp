#include "hemo/dataset.hpp"

#include <stdexcept>

#include "hemo/binary_io.hpp"

namespace hemo {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kRecordBytes = sizeof(SampleRecord);
static_assert(kRecordBytes == 140, "record layout is part of the file format");

constexpr std::uint32_t kFlagClampPressure = 1u << 0;
constexpr std::uint32_t kFlagMuFromPressure = 1u << 1;
constexpr std::uint32_t kFlagTruncated = 1u << 0;

void write_meta(std::ostream& os, const DatasetMeta& m) {
    io::write_f64(os, m.constants.rho0);
    io::write_f64(os, m.constants.cs);
    io::write_f64(os, m.constants.gamma);
    io::write_f64(os, m.constants.mu);
    io::write_f64(os, m.constants.tau_y);
    io::write_f64(os, m.constants.casson_n);
    io::write_f64(os, m.constants.av_eps);
    io::write_f64(os, m.constants.g.x);
    io::write_f64(os, m.constants.g.y);
    io::write_f64(os, m.constants.g.z);
    io::write_f64(os, m.constants.dt);
    std::uint32_t flags = 0;
    if (m.constants.clamp_negative_pressure) flags |= kFlagClampPressure;
    if (m.constants.mu_from_pressure) flags |= kFlagMuFromPressure;
    io::write_u32(os, flags);
    io::write_f64(os, m.kernel.h);
    io::write_u32(os, static_cast<std::uint32_t>(m.kernel.value_family));
    io::write_u32(os, static_cast<std::uint32_t>(m.kernel.grad_family));
    io::write_u32(os, static_cast<std::uint32_t>(m.binning.bins));
    io::write_f64(os, m.binning.dist_range);
    io::write_f64(os, m.binning.vel_range);
    io::write_u64(os, m.seed);
    io::write_u32(os, m.proxy_count);
    io::write_u32(os, static_cast<std::uint32_t>(m.proxy_file.size()));
    io::put_bytes(os, m.proxy_file.data(), m.proxy_file.size());
}

DatasetMeta read_meta(std::istream& is) {
    DatasetMeta m;
    m.constants.rho0 = io::read_f64(is);
    m.constants.cs = io::read_f64(is);
    m.constants.gamma = io::read_f64(is);
    m.constants.mu = io::read_f64(is);
    m.constants.tau_y = io::read_f64(is);
    m.constants.casson_n = io::read_f64(is);
    m.constants.av_eps = io::read_f64(is);
    m.constants.g.x = io::read_f64(is);
    m.constants.g.y = io::read_f64(is);
    m.constants.g.z = io::read_f64(is);
    m.constants.dt = io::read_f64(is);
    const std::uint32_t flags = io::read_u32(is);
    m.constants.clamp_negative_pressure = flags & kFlagClampPressure;
    m.constants.mu_from_pressure = flags & kFlagMuFromPressure;
    m.kernel.h = io::read_f64(is);
    m.kernel.value_family = static_cast<KernelFamily>(io::read_u32(is));
    m.kernel.grad_family = static_cast<KernelFamily>(io::read_u32(is));
    m.binning.bins = static_cast<int>(io::read_u32(is));
    m.binning.dist_range = io::read_f64(is);
    m.binning.vel_range = io::read_f64(is);
    m.seed = io::read_u64(is);
    m.proxy_count = io::read_u32(is);
    const std::uint32_t len = io::read_u32(is);
    if (len > 1u << 16) throw std::runtime_error("dataset proxy path is implausibly long");
    m.proxy_file.resize(len);
    if (len > 0) io::get_bytes(is, m.proxy_file.data(), len);
    return m;
}

}  // namespace

DatasetWriter::DatasetWriter(const std::string& path, const DatasetMeta& meta, int max_sequences)
    : os_(path, std::ios::binary), path_(path), max_sequences_(max_sequences) {
    if (!os_) throw std::runtime_error("cannot write dataset file " + path);
    if (max_sequences < 1) throw std::invalid_argument("dataset needs at least one sequence slot");
    io::write_magic(os_, "BFDS");
    io::write_u32(os_, kVersion);
    write_meta(os_, meta);
    io::write_u32(os_, static_cast<std::uint32_t>(max_sequences));
    table_pos_ = os_.tellp();
    for (int s = 0; s < max_sequences; ++s) {
        io::write_u32(os_, 0);  // frames
        io::write_u32(os_, 0);  // particles
        io::write_u32(os_, 0);  // flags
    }
}

DatasetWriter::~DatasetWriter() {
    if (!finished_ && os_.is_open()) {
        try {
            finish();
        } catch (...) {
        }
    }
}

void DatasetWriter::begin_sequence(std::uint32_t particles) {
    if (in_sequence_) throw std::logic_error("previous sequence not ended");
    if (static_cast<int>(table_.size()) >= max_sequences_) {
        throw std::logic_error("dataset sequence slots exhausted");
    }
    in_sequence_ = true;
    current_particles_ = particles;
    current_frames_ = 0;
}

void DatasetWriter::write_frame(const std::vector<SampleRecord>& records) {
    if (!in_sequence_) throw std::logic_error("write_frame outside a sequence");
    if (records.size() != current_particles_) {
        throw std::invalid_argument("frame record count does not match the sequence");
    }
    io::put_bytes(os_, records.data(), records.size() * kRecordBytes);
    if (!os_) throw std::runtime_error("short write to dataset file " + path_);
    ++current_frames_;
}

void DatasetWriter::end_sequence(bool truncated) {
    if (!in_sequence_) throw std::logic_error("end_sequence outside a sequence");
    table_.push_back({current_frames_, current_particles_, truncated});
    in_sequence_ = false;
}

void DatasetWriter::finish() {
    if (finished_) return;
    if (in_sequence_) end_sequence(true);
    os_.seekp(table_pos_);
    for (int s = 0; s < max_sequences_; ++s) {
        if (s < static_cast<int>(table_.size())) {
            io::write_u32(os_, table_[s].frames);
            io::write_u32(os_, table_[s].particles);
            io::write_u32(os_, table_[s].truncated ? kFlagTruncated : 0);
        } else {
            io::write_u32(os_, 0);
            io::write_u32(os_, 0);
            io::write_u32(os_, 0);
        }
    }
    os_.flush();
    if (!os_) throw std::runtime_error("failed to finalize dataset file " + path_);
    os_.close();
    finished_ = true;
}

DatasetReader::DatasetReader(const std::string& path) : is_(path, std::ios::binary) {
    if (!is_) throw std::runtime_error("cannot open dataset file " + path);
    io::expect_magic(is_, "BFDS", path);
    const std::uint32_t version = io::read_u32(is_);
    if (version != kVersion) {
        throw std::runtime_error(path + ": dataset format version " + std::to_string(version) +
                                 ", expected " + std::to_string(kVersion));
    }
    meta_ = read_meta(is_);
    const std::uint32_t slots = io::read_u32(is_);
    if (slots == 0 || slots > 1u << 16) throw std::runtime_error(path + ": bad sequence table");
    for (std::uint32_t s = 0; s < slots; ++s) {
        SequenceInfo info;
        info.frames = io::read_u32(is_);
        info.particles = io::read_u32(is_);
        info.truncated = io::read_u32(is_) & kFlagTruncated;
        if (info.frames > 0) table_.push_back(info);
    }
    data_start_ = is_.tellg();
}

std::uint64_t DatasetReader::total_records() const {
    std::uint64_t n = 0;
    for (const auto& s : table_) n += std::uint64_t{s.frames} * s.particles;
    return n;
}

void DatasetReader::read_frame(int seq, int frame, std::vector<SampleRecord>& out) {
    if (seq < 0 || seq >= sequence_count()) throw std::out_of_range("dataset sequence index");
    const SequenceInfo& info = table_[seq];
    if (frame < 0 || static_cast<std::uint32_t>(frame) >= info.frames) {
        throw std::out_of_range("dataset frame index");
    }
    std::streamoff off = data_start_;
    for (int s = 0; s < seq; ++s) {
        off += std::streamoff(table_[s].frames) * table_[s].particles *
               static_cast<std::streamoff>(kRecordBytes);
    }
    off += std::streamoff(frame) * info.particles * static_cast<std::streamoff>(kRecordBytes);
    is_.seekg(off);
    out.resize(info.particles);
    io::get_bytes(is_, out.data(), out.size() * kRecordBytes);
}

}  // namespace hemo
