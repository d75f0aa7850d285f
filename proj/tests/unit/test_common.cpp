#include "gsb/audio.hpp"
#include "gsb/labels.hpp"
#include "gsb/manifest.hpp"
#include "gsb/rng.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numeric>
#include <set>

using namespace gsb;

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, StreamsDiffer) {
  auto a = Rng::for_stream(7, 0), b = Rng::for_stream(7, 1);
  EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformIntCoversInclusiveRange) {
  Rng r(1);
  std::set<int> seen;
  for (int i = 0; i < 2000; ++i) {
    const int v = r.uniform_int(3, 8);
    ASSERT_GE(v, 3);
    ASSERT_LE(v, 8);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 6u);
}

TEST(Rng, NormalMoments) {
  Rng r(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(9);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  r.shuffle(std::span(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Fnv, KnownVectors) {
  const std::string a = "a";
  EXPECT_EQ(fnv1a64({}), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64(std::span(reinterpret_cast<const unsigned char*>(a.data()), 1)), 0xaf63dc4c8601ec8cULL);
}

TEST(Labels, KeysRoundTrip) {
  for (auto c : kAllClasses) EXPECT_EQ(class_from_key(class_key(c)), c);
  EXPECT_EQ(class_name(FirearmClass::HandgunPistol), "Handgun/Pistol");
  EXPECT_FALSE(class_from_key("cannon").has_value());
  EXPECT_EQ(detection_from_key("no_gunshot"), DetectionLabel::NoGunshot);
}

TEST(Wav, Pcm16RoundTripIsQuantisation) {
  AudioClip clip;
  for (int i = 0; i < 1000; ++i) clip.samples.push_back(0.9 * std::sin(i * 0.05));
  const auto decoded = decode_wav(encode_wav(clip));
  ASSERT_EQ(decoded.samples.size(), clip.samples.size());
  EXPECT_EQ(decoded.sample_rate, 44100);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) EXPECT_EQ(decoded.samples[i], quantize_pcm16(clip.samples[i]));
}

TEST(Wav, HeaderLayout) {
  AudioClip clip;
  clip.samples = {0.0, 0.5, -0.5};
  const auto b = encode_wav(clip);
  ASSERT_EQ(b.size(), 44u + 6u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "RIFF");
  EXPECT_EQ(std::string(b.begin() + 8, b.begin() + 12), "WAVE");
  EXPECT_EQ(b[22], 1);   // mono
  EXPECT_EQ(b[34], 16);  // bits per sample
}

TEST(Wav, TruncatedIsCorrupt) {
  AudioClip clip;
  clip.samples.assign(100, 0.1);
  auto b = encode_wav(clip);
  b.resize(30);
  EXPECT_GSB_ERROR(decode_wav(b), ErrorCode::CorruptFile);
  EXPECT_GSB_ERROR(decode_wav({'n', 'o', 'p', 'e'}), ErrorCode::CorruptFile);
}

TEST(Wav, QuantizeClampsAndRounds) {
  EXPECT_EQ(quantize_pcm16(2.0), 32767.0 / 32768.0);
  EXPECT_EQ(quantize_pcm16(-2.0), -1.0);
  EXPECT_EQ(quantize_pcm16(0.0), 0.0);
}

TEST(Manifest, SerializeParseRoundTrip) {
  Manifest m;
  m.rows.push_back({"clip_00000", "audio/clip_00000.wav", DetectionLabel::Gunshot, FirearmClass::Rifle, 1.5, true, 11});
  m.rows.push_back({"clip_00001", "audio/clip_00001.wav", DetectionLabel::NoGunshot, std::nullopt, 1.5, false, 12});
  const auto text = serialize_manifest(m);
  const auto back = parse_manifest(text, "/tmp");
  EXPECT_EQ(back.rows, m.rows);
  EXPECT_NE(text.find("\"class\":null"), std::string::npos);
}

TEST(Manifest, RejectsClassWithoutGunshotAndDuplicateIds) {
  const std::string bad_class =
      R"({"id":"a","path":"a.wav","detection_label":"no_gunshot","class":"rifle","duration_s":1,"clean":true,"seed":1})";
  EXPECT_GSB_ERROR(parse_manifest(bad_class + "\n", "."), ErrorCode::CorruptFile);
  const std::string row =
      R"({"id":"a","path":"a.wav","detection_label":"gunshot","class":"rifle","duration_s":1,"clean":true,"seed":1})";
  EXPECT_GSB_ERROR(parse_manifest(row + "\n" + row + "\n", "."), ErrorCode::CorruptFile);
}

TEST(Manifest, LoadRequiresExistingPaths) {
  oracle::TempDir dir("manifest");
  Manifest m;
  m.rows.push_back({"x", "audio/x.wav", DetectionLabel::NoGunshot, std::nullopt, 1.0, true, 1});
  save_manifest(dir / "manifest.jsonl", m);
  EXPECT_GSB_ERROR(load_manifest(dir / "manifest.jsonl"), ErrorCode::IoError);
  AudioClip clip;
  clip.samples.assign(10, 0.0);
  write_wav(dir / "audio/x.wav", clip);
  EXPECT_EQ(load_manifest(dir / "manifest.jsonl").rows.size(), 1u);
}
