#include "doctest.h"

#include "wakesteer/rng.hpp"

#include <cmath>
#include <vector>

using wakesteer::StreamRng;

TEST_CASE("same seed and label reproduce the same sequence") {
    StreamRng a(42, "plant");
    StreamRng b(42, "plant");
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different labels give independent streams") {
    StreamRng a(42, "plant");
    StreamRng b(42, "sampler");
    int collisions = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64()) ++collisions;
    CHECK(collisions == 0);
}

TEST_CASE("different seeds give different streams") {
    StreamRng a(1, "plant");
    StreamRng b(2, "plant");
    CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("counter restore resumes the stream exactly") {
    StreamRng a(7, "x");
    for (int i = 0; i < 17; ++i) a.next_u64();
    const auto c = a.counter();
    std::vector<std::uint64_t> tail;
    for (int i = 0; i < 10; ++i) tail.push_back(a.next_u64());

    StreamRng b(7, "x");
    b.set_counter(c);
    for (int i = 0; i < 10; ++i) CHECK(b.next_u64() == tail[static_cast<size_t>(i)]);
}

TEST_CASE("uniform stays in [0, 1) and bounded variants respect limits") {
    StreamRng r(3, "u");
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform(-5.0, 2.5);
        CHECK(u >= -5.0);
        CHECK(u < 2.5);
    }
}

TEST_CASE("normal consumes exactly two counter values") {
    StreamRng r(3, "n");
    const auto c0 = r.counter();
    r.normal();
    CHECK(r.counter() == c0 + 2);
}

TEST_CASE("normal has approximately zero mean and unit variance") {
    StreamRng r(11, "stats");
    const int n = 20000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);
}
