#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "hemo/constants.hpp"
#include "hemo/features.hpp"
#include "hemo/kernels.hpp"

namespace hemo {

// Everything a trainer needs to reproduce rollouts from the records:
// solver constants, kernel, feature binning, and the proxy set reference.
struct DatasetMeta {
    FluidConstants constants;
    KernelParams kernel;
    BinningSpec binning;
    std::string proxy_file;
    std::uint32_t proxy_count = 0;
    std::uint64_t seed = 0;
};

// One particle at one sample frame: state at frame n, features of frame n,
// acceleration target from frame n+1. Stored verbatim as f32, so file
// round trips are bitwise.
struct SampleRecord {
    float r[3];
    float v[3];
    float a[3];
    float feature[kFeatureDim];
    float target[3];

    bool operator==(const SampleRecord&) const = default;
};

struct SequenceInfo {
    std::uint32_t frames = 0;     // sample frames (states - 1)
    std::uint32_t particles = 0;
    bool truncated = false;       // run hit the instability detector
};

// Streaming writer. Sequence table slots are reserved up front and patched
// on finish(), so captures never buffer more than one frame of records.
class DatasetWriter {
public:
    DatasetWriter(const std::string& path, const DatasetMeta& meta, int max_sequences);
    ~DatasetWriter();

    void begin_sequence(std::uint32_t particles);
    void write_frame(const std::vector<SampleRecord>& records);
    void end_sequence(bool truncated = false);
    void finish();

private:
    std::ofstream os_;
    std::string path_;
    std::streampos table_pos_;
    std::vector<SequenceInfo> table_;
    int max_sequences_;
    std::uint32_t current_particles_ = 0;
    std::uint32_t current_frames_ = 0;
    bool in_sequence_ = false;
    bool finished_ = false;
};

class DatasetReader {
public:
    explicit DatasetReader(const std::string& path);

    const DatasetMeta& meta() const { return meta_; }
    int sequence_count() const { return static_cast<int>(table_.size()); }
    const SequenceInfo& sequence(int s) const { return table_.at(s); }
    std::uint64_t total_records() const;

    // Sample frames are 0-based within a sequence.
    void read_frame(int seq, int frame, std::vector<SampleRecord>& out);

private:
    mutable std::ifstream is_;
    DatasetMeta meta_;
    std::vector<SequenceInfo> table_;
    std::streamoff data_start_ = 0;
};

}  // namespace hemo
