// Copyright 2026  The dfwhisper Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

extern "C" {
#include <libavcodec/avcodec.h>
#include <libavformat/avformat.h>
#include <libavutil/avutil.h>
}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>

#include "dfw/audio/audio.h"
#include "dfw/common/error.h"

namespace dfw::audio {
namespace {

struct FormatCloser {
  void operator()(AVFormatContext* c) const { avformat_close_input(&c); }
};
struct CodecFreer {
  void operator()(AVCodecContext* c) const { avcodec_free_context(&c); }
};
struct PacketFreer {
  void operator()(AVPacket* p) const { av_packet_free(&p); }
};
struct FrameFreer {
  void operator()(AVFrame* f) const { av_frame_free(&f); }
};

std::string av_message(int code) {
  char buf[AV_ERROR_MAX_STRING_SIZE] = {0};
  av_strerror(code, buf, sizeof(buf));
  return buf;
}

double sample_at(const AVFrame* f, AVSampleFormat fmt, int channels, int i, int ch) {
  const bool planar = av_sample_fmt_is_planar(fmt);
  const uint8_t* base = planar ? f->extended_data[ch] : f->extended_data[0];
  const int index = planar ? i : i * channels + ch;
  switch (av_get_packed_sample_fmt(fmt)) {
    case AV_SAMPLE_FMT_U8:
      return (static_cast<double>(base[index]) - 128.0) / 128.0;
    case AV_SAMPLE_FMT_S16: {
      int16_t v;
      std::memcpy(&v, base + 2 * index, 2);
      return v / 32768.0;
    }
    case AV_SAMPLE_FMT_S32: {
      int32_t v;
      std::memcpy(&v, base + 4 * index, 4);
      return v / 2147483648.0;
    }
    case AV_SAMPLE_FMT_S64: {
      int64_t v;
      std::memcpy(&v, base + 8 * index, 8);
      return static_cast<double>(v) / 9223372036854775808.0;
    }
    case AV_SAMPLE_FMT_FLT: {
      float v;
      std::memcpy(&v, base + 4 * index, 4);
      return v;
    }
    case AV_SAMPLE_FMT_DBL: {
      double v;
      std::memcpy(&v, base + 8 * index, 8);
      return v;
    }
    default:
      fail(ErrorKind::kUnreadableFile, "unsupported sample format");
  }
}

void append_frame(const AVFrame* frame, AVSampleFormat fmt, int channels,
                  std::vector<double>& out) {
  for (int i = 0; i < frame->nb_samples; ++i)
    for (int ch = 0; ch < channels; ++ch) {
      double v = sample_at(frame, fmt, channels, i, ch);
      // Float containers may exceed full scale; keep the [-1, 1] contract.
      out.push_back(v > 1.0 ? 1.0 : (v < -1.0 ? -1.0 : v));
    }
}

}  // namespace

AudioClip load_audio(const std::string& path) {
  av_log_set_level(AV_LOG_QUIET);
  AVFormatContext* raw = nullptr;
  int rc = avformat_open_input(&raw, path.c_str(), nullptr, nullptr);
  if (rc < 0) fail(ErrorKind::kUnreadableFile, path + ": " + av_message(rc));
  std::unique_ptr<AVFormatContext, FormatCloser> fmt(raw);
  if ((rc = avformat_find_stream_info(fmt.get(), nullptr)) < 0)
    fail(ErrorKind::kUnreadableFile, path + ": " + av_message(rc));
  AVCodec* codec = nullptr;
  const int stream = av_find_best_stream(fmt.get(), AVMEDIA_TYPE_AUDIO, -1, -1, &codec, 0);
  if (stream < 0 || codec == nullptr) fail(ErrorKind::kUnreadableFile, path + ": no audio stream");
  std::unique_ptr<AVCodecContext, CodecFreer> ctx(avcodec_alloc_context3(codec));
  avcodec_parameters_to_context(ctx.get(), fmt->streams[stream]->codecpar);
  if ((rc = avcodec_open2(ctx.get(), codec, nullptr)) < 0)
    fail(ErrorKind::kUnreadableFile, path + ": " + av_message(rc));

  AudioClip clip;
  clip.rate = ctx->sample_rate;
  clip.channels = ctx->channels;
  if (clip.rate <= 0 || clip.channels <= 0)
    fail(ErrorKind::kUnreadableFile, path + ": missing rate or channel count");

  std::unique_ptr<AVPacket, PacketFreer> packet(av_packet_alloc());
  std::unique_ptr<AVFrame, FrameFreer> frame(av_frame_alloc());
  auto drain = [&]() {
    while ((rc = avcodec_receive_frame(ctx.get(), frame.get())) >= 0) {
      append_frame(frame.get(), static_cast<AVSampleFormat>(frame->format), clip.channels,
                   clip.samples);
      av_frame_unref(frame.get());
    }
    if (rc != AVERROR(EAGAIN) && rc != AVERROR_EOF)
      fail(ErrorKind::kUnreadableFile, path + ": " + av_message(rc));
  };
  while ((rc = av_read_frame(fmt.get(), packet.get())) >= 0) {
    if (packet->stream_index == stream) {
      const int sent = avcodec_send_packet(ctx.get(), packet.get());
      av_packet_unref(packet.get());
      if (sent < 0) fail(ErrorKind::kUnreadableFile, path + ": " + av_message(sent));
      drain();
    } else {
      av_packet_unref(packet.get());
    }
  }
  if (rc != AVERROR_EOF) fail(ErrorKind::kUnreadableFile, path + ": " + av_message(rc));
  avcodec_send_packet(ctx.get(), nullptr);
  drain();
  if (clip.samples.empty()) fail(ErrorKind::kEmptyAudio, path + ": zero samples");
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip, bool float32) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path);
  const uint16_t bits = float32 ? 32 : 16;
  const uint16_t block = static_cast<uint16_t>(clip.channels * bits / 8);
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * bits / 8);
  auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  out.write("RIFF", 4);
  u32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  u32(16);
  u16(float32 ? 3 : 1);
  u16(static_cast<uint16_t>(clip.channels));
  u32(static_cast<uint32_t>(clip.rate));
  u32(static_cast<uint32_t>(clip.rate) * block);
  u16(block);
  u16(bits);
  out.write("data", 4);
  u32(data_bytes);
  for (double v : clip.samples) {
    if (float32) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), 4);
    } else {
      const double s = std::clamp(v, -1.0, 1.0) * 32768.0;
      const auto q = static_cast<int16_t>(std::clamp(std::lround(s), -32768L, 32767L));
      out.write(reinterpret_cast<const char*>(&q), 2);
    }
  }
  if (!out) fail(ErrorKind::kIoError, "short write to " + path);
}

}  // namespace dfw::audio
