//! Prime generation: a simple sieve for small bounds and a streaming
//! segmented sieve for enumerating primes up to ~1e9 without storing them.

/// All primes `<= limit`, by a plain sieve of Eratosthenes.
///
/// Intended for base primes (`limit <= ~1e8`); the segmented enumerator
/// below is the right tool for larger bounds.
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::with_capacity(if n > 16 {
        n / (n.ilog2() as usize) * 2
    } else {
        8
    });
    primes.push(2);
    let mut i = 3usize;
    while i * i <= n {
        if !composite[i] {
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += 2 * i;
            }
        }
        i += 2;
    }
    let mut p = 3usize;
    while p <= n {
        if !composite[p] {
            primes.push(p as u64);
        }
        p += 2;
    }
    primes
}

/// Integers covered by one segment of the streaming sieve.
const SEGMENT_SPAN: u64 = 1 << 22;

/// Calls `f` on every prime `<= limit` in ascending order.
///
/// Odd-only segmented sieve; memory stays at one segment regardless of
/// `limit`, and the visit order is deterministic.
pub fn for_each_prime<F: FnMut(u64)>(limit: u64, mut f: F) {
    if limit < 2 {
        return;
    }
    f(2);
    if limit < 3 {
        return;
    }
    let sqrt = (limit as f64).sqrt() as u64 + 1;
    // odd base primes; one flag per odd number in the segment
    let base: Vec<u64> = sieve_primes(sqrt).into_iter().skip(1).collect();
    let mut flags = vec![false; (SEGMENT_SPAN / 2 + 1) as usize];
    let mut lo = 3u64; // always odd
    while lo <= limit {
        let hi = (lo + SEGMENT_SPAN).min(limit + 1); // half-open [lo, hi)
        let count = ((hi - lo) as usize).div_ceil(2); // odd numbers in [lo, hi)
        for flag in flags[..count].iter_mut() {
            *flag = false;
        }
        for &p in &base {
            if p * p >= hi {
                break;
            }
            // first odd multiple of p in [lo, hi), at least p*p
            let mut start = p * p;
            if start < lo {
                let mut first = lo + (p - lo % p) % p;
                if first.is_multiple_of(2) {
                    first += p;
                }
                start = first;
            }
            let mut m = start;
            while m < hi {
                flags[((m - lo) / 2) as usize] = true;
                m += 2 * p;
            }
        }
        let mut m = lo;
        let mut idx = 0usize;
        while m < hi {
            if !flags[idx] {
                f(m);
            }
            idx += 1;
            m += 2;
        }
        lo = if hi % 2 == 1 { hi } else { hi + 1 };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sieve_matches_known_list() {
        assert_eq!(sieve_primes(1), Vec::<u64>::new());
        assert_eq!(sieve_primes(2), vec![2]);
        assert_eq!(sieve_primes(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(sieve_primes(100).len(), 25);
        assert_eq!(sieve_primes(1_000_000).len(), 78_498);
    }

    #[test]
    fn streaming_matches_simple_sieve() {
        for limit in [2u64, 3, 10, 100, 65_536, 1_048_577] {
            let mut streamed = Vec::new();
            for_each_prime(limit, |p| streamed.push(p));
            assert_eq!(streamed, sieve_primes(limit), "limit {limit}");
        }
    }

    #[test]
    fn streaming_crosses_segment_boundaries() {
        // limit just above one segment span
        let limit = SEGMENT_SPAN + 1000;
        let mut count = 0u64;
        let mut last = 0u64;
        for_each_prime(limit, |p| {
            assert!(p > last);
            last = p;
            count += 1;
        });
        let expected = sieve_primes(limit).len() as u64;
        assert_eq!(count, expected);
    }
}
