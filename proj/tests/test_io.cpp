#include <doctest.h>

#include <sstream>

#include "bdet/io.hpp"

using namespace bdet;

namespace {

GroundTruth parse(const std::string& text) {
  std::istringstream in(text);
  return read_ground_truth(in);
}

}  // namespace

TEST_CASE("ground truth parsing") {
  const GroundTruth gt = parse(
      "image,left,top,right,bottom\n"
      "a.png,1,2,30,40\n"
      "b.png,0.5,0.25,10,12\r\n"
      "\n"
      "a.png, 5 ,6,7,8\n");
  REQUIRE(gt.size() == 2);
  REQUIRE(gt.at("a.png").size() == 2);
  CHECK(gt.at("a.png")[0] == BBox{1, 2, 30, 40});
  CHECK(gt.at("a.png")[1] == BBox{5, 6, 7, 8});
  CHECK(gt.at("b.png")[0] == BBox{0.5, 0.25, 10, 12});
  CHECK(parse("image,left,top,right,bottom\n").empty());
}

TEST_CASE("ground truth errors") {
  CHECK_THROWS_AS(parse(""), ValidationError);
  CHECK_THROWS_AS(parse("image,x,y,w,h\n"), ValidationError);
  CHECK_THROWS_AS(parse("image,left,top,right,bottom\na.png,1,2,3\n"), ValidationError);
  CHECK_THROWS_AS(parse("image,left,top,right,bottom\na.png,1,2,3,4,5\n"), ValidationError);
  CHECK_THROWS_AS(parse("image,left,top,right,bottom\na.png,1,2,3,\n"), ValidationError);
  CHECK_THROWS_AS(parse("image,left,top,right,bottom\na.png,1,two,3,4\n"), ValidationError);
  CHECK_THROWS_AS(parse("image,left,top,right,bottom\na.png,1,2,3x,4\n"), ValidationError);
  CHECK_THROWS_AS(parse("image,left,top,right,bottom\n,1,2,3,4\n"), ValidationError);
  CHECK_THROWS_AS(parse("image,left,top,right,bottom\na.png,5,2,3,4\n"), ValidationError);
  CHECK_THROWS_AS(parse("image,left,top,right,bottom\na.png,1,2,1,4\n"), ValidationError);
  CHECK_THROWS_AS(read_ground_truth(std::filesystem::path("/nonexistent/gt.csv")), ValidationError);
  try {
    parse("image,left,top,right,bottom\na.png,1,2,3,4\nb.png,1\n");
    FAIL("expected a throw");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("ground truth round trip") {
  GroundTruth gt;
  gt["x.png"] = {{1.5, 2, 10, 20}, {0, 0, 3, 4}};
  gt["a.png"] = {{7, 8, 9, 10}};
  std::ostringstream out;
  write_ground_truth(gt, out);
  CHECK(out.str().rfind("image,left,top,right,bottom\na.png,7.000000,", 0) == 0);
  CHECK(parse(out.str()) == gt);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.0) == "0.000000");
  CHECK(format_number(-0.0) == "0.000000");
  CHECK(format_number(-1e-9) == "0.000000");
  CHECK(format_number(1.25) == "1.250000");
  CHECK(format_number(-3.5) == "-3.500000");
}

TEST_CASE("table headers") {
  std::ostringstream d, c, k, s, b, m;
  write_detections_csv(d, "img", {});
  CHECK(d.str() == "image,left,top,right,bottom,angle,pos,neg,margin,h,low,high\n");
  write_candidates_csv(c, "img", {});
  CHECK(c.str() == "image,id,left,top,right,bottom,angle,points,low,high\n");
  write_contours_csv(k, {});
  CHECK(k.str() == "candidate_id,x,y\n");
  write_sweep_csv(s, {});
  CHECK(s.str() == "label,step,low,high,pairs,candidates,gt,matched,recall\n");
  write_bench_csv(b, {});
  CHECK(b.str() == "width,height,pixels,stage,seconds,candidates,detections\n");
  const MetricsRow row{"A", "adaboost", true, compute_metrics(8, 2, 2)};
  write_metrics_csv(m, std::span<const MetricsRow>(&row, 1));
  CHECK(m.str() ==
        "dataset,classifier,rotation_on,precision,recall,f1,tp,fp,fn\n"
        "A,adaboost,true,0.800000,0.800000,0.800000,8,2,2\n");
}

TEST_CASE("detection rows") {
  Detection det;
  det.bbox = {1, 2, 3, 4};
  det.angle = 12.5;
  det.score = {0.9, 0.1, 0.8};
  det.h = 0.9;
  det.source = {0.2, 0.4};
  std::ostringstream out;
  write_detections_csv(out, "s.png", std::span<const Detection>(&det, 1), false);
  CHECK(out.str() ==
        "s.png,1.000000,2.000000,3.000000,4.000000,12.500000,0.900000,0.100000,0.800000,0.900000,"
        "0.200000,0.400000\n");
}
