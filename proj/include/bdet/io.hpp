#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bdet/contours.hpp"
#include "bdet/geometry.hpp"
#include "bdet/pipeline.hpp"

namespace bdet {

/// Ground truth keyed by image name; rows keep file order within an image.
using GroundTruth = std::map<std::string, std::vector<BBox>>;

/// CSV with header `image,left,top,right,bottom`. Throws ValidationError on a
/// wrong header, wrong field count, non-numeric field or invalid box.
GroundTruth read_ground_truth(std::istream& in);
GroundTruth read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const GroundTruth& gt, std::ostream& out);

/// Fixed-precision number formatting shared by every table writer.
std::string format_number(double v);

/// image,left,top,right,bottom,angle,pos,neg,margin,h,low,high
void write_detections_csv(std::ostream& out, const std::string& image, std::span<const Detection> dets,
                          bool header = true);
/// image,id,left,top,right,bottom,angle,points,low,high
void write_candidates_csv(std::ostream& out, const std::string& image,
                          std::span<const Candidate> cands, bool header = true);
/// candidate_id,x,y (one row per chain point)
void write_contours_csv(std::ostream& out, std::span<const Candidate> cands);
/// label,step,low,high,pairs,candidates,gt,matched,recall
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
/// width,height,pixels,stage,seconds,candidates,detections
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

struct MetricsRow {
  std::string dataset;
  std::string classifier;
  bool rotation_on = true;
  Metrics metrics;
};
/// dataset,classifier,rotation_on,precision,recall,f1,tp,fp,fn
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);

std::string read_text(const std::filesystem::path& path);
/// Truncates and writes; throws std::runtime_error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace bdet
