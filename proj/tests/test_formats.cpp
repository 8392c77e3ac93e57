#include <gtest/gtest.h>

#include <png.h>

#include <cstdio>
#include <fstream>

#include "fpvuln/image_io.hpp"
#include "fpvuln/manifest.hpp"
#include "fpvuln/report.hpp"
#include "test_support.hpp"

using namespace fpvuln;
namespace fs = std::filesystem;

namespace {

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

// Writes an 8-bit PNG with libpng directly.
void write_png(const fs::path& p, int w, int h, int color_type, const std::vector<std::uint8_t>& data) {
  FILE* fp = std::fopen(p.c_str(), "wb");
  ASSERT_NE(fp, nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : color_type == PNG_COLOR_TYPE_GRAY_ALPHA ? 2 : 1;
  for (int y = 0; y < h; ++y)
    png_write_row(png, const_cast<png_bytep>(data.data() + static_cast<std::size_t>(y) * w * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

FingerprintImage ramp(int w, int h) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>((i * 7) % 256);
  return FingerprintImage(w, h, std::move(px));
}

} // namespace

TEST(Pgm, RoundTrip) {
  const auto dir = test::scratch_dir("pgm");
  const auto img = ramp(37, 41);
  write_pgm(img, dir / "a.pgm");
  EXPECT_EQ(read_pgm(dir / "a.pgm"), img);
  EXPECT_EQ(read_image(dir / "a.pgm"), img);
  fs::remove_all(dir);
}

TEST(Pgm, HeaderWithComments) {
  const auto dir = test::scratch_dir("pgm_comment");
  write_bytes(dir / "c.pgm", std::string("P5\n# made by hand\n2 2\n255\n") + std::string("\x01\x02\x03\x04", 4));
  const auto img = read_pgm(dir / "c.pgm");
  EXPECT_EQ(img.width(), 2);
  EXPECT_EQ(img.at(1, 1), 4);
  fs::remove_all(dir);
}

TEST(Pgm, RejectsMalformedFiles) {
  const auto dir = test::scratch_dir("pgm_bad");
  write_bytes(dir / "ascii.pgm", "P2\n2 2\n255\n1 2 3 4\n");
  write_bytes(dir / "short.pgm", "P5\n4 4\n255\nabc");
  write_bytes(dir / "deep.pgm", "P5\n2 2\n65535\n12345678");
  write_bytes(dir / "junk.pgm", "P5\nxx yy\n255\n");
  for (const char* f : {"ascii.pgm", "short.pgm", "deep.pgm", "junk.pgm"})
    EXPECT_THROW(read_pgm(dir / f), FormatError) << f;
  EXPECT_THROW(read_pgm(dir / "absent.pgm"), IoError);
  EXPECT_THROW(write_pgm(ramp(4, 4), dir / "no" / "such" / "dir.pgm"), IoError);
  fs::remove_all(dir);
}

TEST(Png, GrayAndColour) {
  const auto dir = test::scratch_dir("png");
  const auto img = ramp(33, 20);
  write_png(dir / "g.png", 33, 20, PNG_COLOR_TYPE_GRAY, {img.pixels().begin(), img.pixels().end()});
  EXPECT_EQ(read_png(dir / "g.png"), img);
  EXPECT_EQ(read_image(dir / "g.png"), img);

  // Equal RGB channels reduce to the same gray value.
  std::vector<std::uint8_t> rgb;
  for (auto v : img.pixels()) rgb.insert(rgb.end(), {v, v, v});
  write_png(dir / "c.png", 33, 20, PNG_COLOR_TYPE_RGB, rgb);
  const auto back = read_image(dir / "c.png");
  ASSERT_EQ(back.width(), 33);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.pixels()[i], img.pixels()[i], 1);

  std::vector<std::uint8_t> ga;
  for (auto v : img.pixels()) ga.insert(ga.end(), {v, 255});
  write_png(dir / "a.png", 33, 20, PNG_COLOR_TYPE_GRAY_ALPHA, ga);
  EXPECT_EQ(read_image(dir / "a.png"), img);
  fs::remove_all(dir);
}

TEST(Png, RejectsNonPng) {
  const auto dir = test::scratch_dir("png_bad");
  write_bytes(dir / "x.png", "definitely not a png file");
  EXPECT_THROW(read_png(dir / "x.png"), FormatError);
  EXPECT_THROW(read_image(dir / "x.png"), FormatError);
  // Valid signature, broken body.
  write_bytes(dir / "y.png", std::string("\x89PNG\r\n\x1a\n", 8) + std::string(40, '\0'));
  EXPECT_THROW(read_png(dir / "y.png"), FormatError);
  EXPECT_THROW(read_image(dir / "missing.png"), IoError);
  fs::remove_all(dir);
}

TEST(Manifest, RoundTrip) {
  CorpusManifest m;
  for (int s = 0; s < 2; ++s)
    for (Coop c : {Coop::none, Coop::cooperative}) {
      SampleRecord r;
      r.subject = s;
      r.finger = 1;
      r.sample = 3;
      r.profile = "thermal";
      r.realness = c == Coop::none ? Realness::real : Realness::fake;
      r.coop = c;
      r.path = "images/" + r.key() + ".pgm";
      if (s == 1) r.quality_level = 4;
      m.records.push_back(r);
    }
  const auto text = encode_manifest(m);
  EXPECT_EQ(text.substr(0, text.find('\n')), kManifestHeader);
  EXPECT_NE(text.find("0,1,3,thermal,real,na,images/0_1_3_thermal_real_na.pgm,\n"), std::string::npos);
  EXPECT_NE(text.find("1,1,3,thermal,fake,coop,images/1_1_3_thermal_fake_coop.pgm,4\n"), std::string::npos);
  const auto back = decode_manifest(text);
  ASSERT_EQ(back.records.size(), 4u);
  EXPECT_EQ(back.subjects, 2);
  EXPECT_EQ(back.profiles, std::vector<std::string>{"thermal"});
  EXPECT_EQ(encode_manifest(back), text);
}

TEST(Manifest, RejectsMalformedText) {
  const std::string head = std::string(kManifestHeader) + "\n";
  EXPECT_THROW(decode_manifest("subject,finger\n"), FormatError);
  EXPECT_THROW(decode_manifest(head + "0,0,0,optical,real,na\n"), FormatError);
  EXPECT_THROW(decode_manifest(head + "x,0,0,optical,real,na,p,\n"), FormatError);
  EXPECT_THROW(decode_manifest(head + "0,0,0,optical,alive,na,p,\n"), FormatError);
  EXPECT_THROW(decode_manifest(head + "0,0,0,optical,fake,sometimes,p,\n"), FormatError);
  EXPECT_THROW(decode_manifest(head + "0,0,0,optical,real,na,p,\n0,0,0,optical,real,na,q,\n"), FormatError);
  EXPECT_THROW(read_manifest("/nonexistent/manifest.csv"), IoError);
}

TEST(Report, CsvLayouts) {
  ScoreSet s;
  s.kind = ScoreKind::genuine;
  s.scores.push_back({{"a", "b", "g"}, 0.1});
  s.scores.push_back({{"a", "c", "g"}, 1.0});
  EXPECT_EQ(scores_csv(s), "pair_id,score\na|b,0.10000000000000001\na|c,1\n");
  EXPECT_EQ(det_csv({{0.5, 12.5, 0.0}, {0.7, 0.0, 50.0}}), "fmr_pct,fnmr_pct\n12.500000,0.000000\n0.000000,50.000000\n");
  EXPECT_EQ(quality_csv({1, 0, 2, 0, 5}), "level,count\n1,1\n2,0\n3,2\n4,0\n5,5\n");
}

TEST(Report, JsonAndMarkdown) {
  EvaluationReport r;
  r.matcher = "ridge";
  r.profile = "optical";
  r.counts = {{"genuine", 408}, {"impostor", 36448}};
  r.eer = 4.25;
  OperatingRow row;
  row.op = {1.0, 0.5, 0.98, 7.5};
  row.attack1["coop"] = {93.15, 91.3, 95.44};
  row.attack1["noncoop"] = {50.0, 40.0, 60.0};
  row.attack2["coop"] = {10.0, 5.0, 15.0};
  row.attack2["noncoop"] = {0.0, 0.0, 2.5};
  r.rows.push_back(row);

  const auto j = nlohmann::json::parse(report_json_text(r));
  EXPECT_EQ(j["matcher"], "ridge");
  EXPECT_EQ(j["counts"]["impostor"], 36448);
  EXPECT_EQ(j["operating_points"][0]["threshold"], 0.5);
  EXPECT_EQ(j["operating_points"][0]["frr"], 7.5);
  EXPECT_EQ(j["operating_points"][0]["attack1"]["coop"]["lo"], 91.3);
  EXPECT_EQ(j["operating_points"][0]["attack2"]["noncoop"]["hi"], 2.5);
  EXPECT_EQ(report_json_text(r), report_json_text(r));

  const auto md = markdown_table({r});
  EXPECT_NE(md.find("### ridge"), std::string::npos);
  EXPECT_NE(md.find("| optical | 1 | 0.98 | 7.50 | 93.15 (91.30,95.44) | 50.00 (40.00,60.00) | 10.00 (5.00,15.00) | "
                    "0.00 (0.00,2.50) |"),
            std::string::npos);
}

TEST(Report, SvgOutputsAreClosedDocuments) {
  const auto det = det_svg({{"nom", {{0.0, 50.0, 1.0}, {1.0, 1.0, 20.0}}}}, "DET");
  EXPECT_EQ(det.rfind("<svg", 0), 0u);
  EXPECT_NE(det.find("<polyline"), std::string::npos);
  EXPECT_EQ(det.substr(det.size() - 7), "</svg>\n");
  const auto q = quality_svg({{"real", {5, 3, 1, 0, 0}}, {"fake", {0, 1, 2, 3, 4}}}, "Quality");
  EXPECT_EQ(q.substr(q.size() - 7), "</svg>\n");
  EXPECT_NE(q.find("fake"), std::string::npos);
}

TEST(Report, WriteTextErrors) {
  EXPECT_THROW(write_text("/nonexistent/dir/x.txt", "x"), IoError);
}
