#pragma once

namespace gems {

/// Keeps freed heap memory mapped. Training builds and drops many mid-sized
/// matrices per step; with glibc defaults most of them round-trip through
/// mmap/munmap. Call once at program start.
void tune_allocator();

}  // namespace gems
