#ifndef VQMETRICS_H
#define VQMETRICS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VqStatus {
  VQ_STATUS_OK = 0,
  VQ_STATUS_END_OF_STREAM = 1,
  VQ_STATUS_NULL_POINTER = -1,
  VQ_STATUS_RESOLUTION_INVALID = -2,
  VQ_STATUS_FILE_UNREADABLE = -3,
  VQ_STATUS_TRUNCATED_FRAME = -4,
  VQ_STATUS_HEADER_MALFORMED = -5,
  VQ_STATUS_UNSUPPORTED_COLORSPACE = -6,
  VQ_STATUS_RESOLUTION_MISMATCH = -7,
  VQ_STATUS_WORD_OVERRUN = -8,
  VQ_STATUS_FRAME_INCOMPLETE = -9,
  VQ_STATUS_BUFFER_TOO_SMALL = -10,
  VQ_STATUS_IO = -11,
  VQ_STATUS_INVALID_ARGUMENT = -12,
  VQ_STATUS_PANIC = -13,
} VqStatus;

// Streaming engine handle: push words, collect one record per frame.
typedef struct VqEngine VqEngine;

// Frame source handle over a raw or y4m file.
typedef struct VqSource VqSource;

// One 128-bit stream word or metric record, least significant byte first.
typedef struct VqWord {
  uint8_t bytes[16];
} VqWord;

// Post-processed metrics of one frame.
typedef struct VqFrameMetrics {
  uint64_t frame_index;
  // False when inter_sum is zero; `blockiness` is then 0 and meaningless.
  bool blockiness_defined;
  double blockiness;
  uint16_t exposure;
  bool blackout;
  double interlace;
  uint32_t inter_sum;
  uint32_t intra_sum;
  uint32_t interlace_count;
} VqFrameMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code.
const char *vq_status_string(enum VqStatus status);

// Message of the last failing call on this thread, or NULL. Valid until
// the next failing call on the same thread.
const char *vq_last_error_message(void);

// Number of words (header included) one frame of this size serializes to.
enum VqStatus vq_word_count(uint32_t width, uint32_t height, uint64_t *out_count);

// Serializes a luma plane into `out_words`. On `BUFFER_TOO_SMALL`,
// `out_written` holds the required capacity and nothing is written.
enum VqStatus vq_serialize_frame(const uint8_t *luma,
                                 size_t len,
                                 uint32_t width,
                                 uint32_t height,
                                 struct VqWord *out_words,
                                 size_t capacity,
                                 size_t *out_written);

// Creates a streaming engine. Free with [`vq_engine_free`].
enum VqStatus vq_engine_new(uint32_t th_blout, struct VqEngine **out_engine);

void vq_engine_free(struct VqEngine *engine);

// Feeds one word. When it completes a frame, `*out_ready` is set and the
// 128-bit metric record is stored in `out_record`.
enum VqStatus vq_engine_push_word(struct VqEngine *engine,
                                  const struct VqWord *word,
                                  bool *out_ready,
                                  struct VqWord *out_record);

// Divides out a raw record for a frame of the given size.
enum VqStatus vq_record_to_metrics(const struct VqWord *record,
                                   uint32_t width,
                                   uint32_t height,
                                   uint64_t frame_index,
                                   struct VqFrameMetrics *out_metrics);

// One-shot: serialize, consume and post-process a single luma plane.
enum VqStatus vq_analyze_frame(const uint8_t *luma,
                               size_t len,
                               uint32_t width,
                               uint32_t height,
                               uint32_t th_blout,
                               struct VqFrameMetrics *out_metrics);

// Opens a headerless raw luma file. Free with [`vq_source_free`].
enum VqStatus vq_source_open_raw(const char *path,
                                 uint32_t width,
                                 uint32_t height,
                                 struct VqSource **out_source);

// Opens a YUV4MPEG2 file. Free with [`vq_source_free`].
enum VqStatus vq_source_open_y4m(const char *path, struct VqSource **out_source);

void vq_source_free(struct VqSource *source);

enum VqStatus vq_source_resolution(const struct VqSource *source,
                                   uint32_t *out_width,
                                   uint32_t *out_height);

// Reads the next frame and computes its metrics. Returns
// `VQ_STATUS_END_OF_STREAM` after the last frame.
enum VqStatus vq_source_next_metrics(struct VqSource *source,
                                     uint32_t th_blout,
                                     struct VqFrameMetrics *out_metrics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VQMETRICS_H */
