#include "bdet/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bdet {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ValidationError("ground truth line " + std::to_string(line_no) + ": '" + s +
                          "' is not a number");
  }
  return v;
}

}  // namespace

GroundTruth read_ground_truth(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("ground truth is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "image,left,top,right,bottom") {
    throw ValidationError("ground truth header must be image,left,top,right,bottom");
  }
  GroundTruth gt;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) {
      throw ValidationError("ground truth line " + std::to_string(line_no) + ": expected 5 fields");
    }
    if (f[0].empty()) throw ValidationError("ground truth line " + std::to_string(line_no) + ": empty image");
    const BBox b{parse_number(f[1], line_no), parse_number(f[2], line_no), parse_number(f[3], line_no),
                 parse_number(f[4], line_no)};
    if (!b.valid()) {
      throw ValidationError("ground truth line " + std::to_string(line_no) +
                            ": box needs left < right and top < bottom");
    }
    gt[f[0]].push_back(b);
  }
  return gt;
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open ground truth " + path.string());
  return read_ground_truth(in);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void write_ground_truth(const GroundTruth& gt, std::ostream& out) {
  out << "image,left,top,right,bottom\n";
  for (const auto& [name, boxes] : gt) {
    for (const BBox& b : boxes) {
      out << name << ',' << format_number(b.left) << ',' << format_number(b.top) << ','
          << format_number(b.right) << ',' << format_number(b.bottom) << '\n';
    }
  }
}

void write_detections_csv(std::ostream& out, const std::string& image, std::span<const Detection> dets,
                          bool header) {
  if (header) out << "image,left,top,right,bottom,angle,pos,neg,margin,h,low,high\n";
  for (const Detection& d : dets) {
    out << image << ',' << format_number(d.bbox.left) << ',' << format_number(d.bbox.top) << ','
        << format_number(d.bbox.right) << ',' << format_number(d.bbox.bottom) << ','
        << format_number(d.angle) << ',' << format_number(d.score.pos) << ','
        << format_number(d.score.neg) << ',' << format_number(d.score.margin) << ','
        << format_number(d.h) << ',' << format_number(d.source.low) << ','
        << format_number(d.source.high) << '\n';
  }
}

void write_candidates_csv(std::ostream& out, const std::string& image,
                          std::span<const Candidate> cands, bool header) {
  if (header) out << "image,id,left,top,right,bottom,angle,points,low,high\n";
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const Candidate& c = cands[i];
    out << image << ',' << i << ',' << format_number(c.bbox.left) << ','
        << format_number(c.bbox.top) << ',' << format_number(c.bbox.right) << ','
        << format_number(c.bbox.bottom) << ',' << format_number(c.angle) << ','
        << c.contour.size() << ',' << format_number(c.source.low) << ','
        << format_number(c.source.high) << '\n';
  }
}

void write_contours_csv(std::ostream& out, std::span<const Candidate> cands) {
  out << "candidate_id,x,y\n";
  for (std::size_t i = 0; i < cands.size(); ++i)
    for (const Point& p : cands[i].contour) out << i << ',' << p.x << ',' << p.y << '\n';
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "label,step,low,high,pairs,candidates,gt,matched,recall\n";
  for (const SweepRow& r : rows) {
    out << r.label << ',' << format_number(r.step) << ',' << format_number(r.low) << ','
        << format_number(r.high) << ',' << r.pairs << ',' << r.candidates << ',' << r.gt << ','
        << r.matched << ',' << format_number(r.recall) << '\n';
  }
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "width,height,pixels,stage,seconds,candidates,detections\n";
  for (const BenchRow& r : rows) {
    out << r.width << ',' << r.height << ',' << r.pixels << ',' << r.stage << ','
        << format_number(r.seconds) << ',' << r.candidates << ',' << r.detections << '\n';
  }
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "dataset,classifier,rotation_on,precision,recall,f1,tp,fp,fn\n";
  for (const MetricsRow& r : rows) {
    out << r.dataset << ',' << r.classifier << ',' << (r.rotation_on ? "true" : "false") << ','
        << format_number(r.metrics.precision) << ',' << format_number(r.metrics.recall) << ','
        << format_number(r.metrics.f1) << ',' << r.metrics.tp << ',' << r.metrics.fp << ','
        << r.metrics.fn << '\n';
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace bdet
