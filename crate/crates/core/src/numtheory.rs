//! Arbitrary-precision modular arithmetic and the square-root structure
//! modulo a product of two odd primes.

use std::fmt;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Arbitrary-precision natural number.
pub type Nat = BigUint;

/// Witness rounds used for primality checks above the trial-division range.
pub const PRIMALITY_ROUNDS: u32 = 32;

const TRIAL_DIVISION_LIMIT: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{value} is not a quadratic residue modulo {modulus}")]
    NonResidue { value: Nat, modulus: Nat },
    /// `gcd(c, n)` is a proper factor of `n`. This is a success path for the
    /// reductions: the carried factor splits the modulus.
    #[error("gcd with the modulus leaks the factor {factor}")]
    FactorLeak { factor: Nat },
}

pub fn mod_pow(base: &Nat, exp: &Nat, modulus: &Nat) -> Result<Nat, NumError> {
    if modulus.is_zero() {
        return Err(NumError::Domain("modulus must be at least 1".into()));
    }
    Ok(base.modpow(exp, modulus))
}

pub fn gcd(a: &Nat, b: &Nat) -> Nat {
    a.gcd(b)
}

/// Probabilistic primality test.
///
/// Values below 2^16 are decided exactly by trial division. Larger values go
/// through `rounds` Miller-Rabin rounds with bases drawn from a stream seeded
/// by the candidate itself, so the answer is reproducible.
pub fn is_probable_prime(n: &Nat, rounds: u32) -> bool {
    let rounds = rounds.max(1);
    if let Some(small) = n.to_u64() {
        if small < TRIAL_DIVISION_LIMIT {
            return trial_division(small);
        }
    }
    let two = Nat::from(2u32);
    if n.is_even() {
        return false;
    }
    for p in SMALL_PRIMES {
        if (n % *p).is_zero() {
            return false;
        }
    }

    let n_minus_one = n - 1u32;
    let shift = n_minus_one.trailing_zeros().unwrap_or(0);
    let odd_part = &n_minus_one >> shift;

    let mut seed = [0u8; 32];
    for (dst, src) in seed.iter_mut().zip(n.to_bytes_le()) {
        *dst ^= src;
    }
    let mut rng = ChaCha8Rng::from_seed(seed);

    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&odd_part, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..shift {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
            if x.is_one() {
                return false;
            }
        }
        return false;
    }
    true
}

const SMALL_PRIMES: &[u32] = &[3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];

fn trial_division(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Samples an odd prime with exactly `bits` bits (top bit set).
pub fn random_odd_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<Nat, NumError> {
    if bits < 3 {
        return Err(NumError::Domain(format!(
            "need at least 3 bits for an odd prime, got {bits}"
        )));
    }
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, PRIMALITY_ROUNDS) {
            return Ok(candidate);
        }
    }
}

fn legendre_is_residue(c: &Nat, p: &Nat) -> bool {
    let exp = (p - 1u32) >> 1;
    c.modpow(&exp, p).is_one()
}

/// Square root modulo an odd prime (Tonelli-Shanks), returning the smaller of
/// the two roots.
pub fn sqrt_mod_prime(c: &Nat, p: &Nat) -> Result<Nat, NumError> {
    if p < &Nat::from(3u32) || p.is_even() {
        return Err(NumError::Domain(format!("{p} is not an odd prime")));
    }
    let c = c % p;
    if c.is_zero() {
        return Ok(c);
    }
    if !legendre_is_residue(&c, p) {
        return Err(NumError::NonResidue {
            value: c,
            modulus: p.clone(),
        });
    }

    let p_minus_one = p - 1u32;
    let s = p_minus_one.trailing_zeros().unwrap_or(0);
    let q = &p_minus_one >> s;

    // any non-residue works as the generator of the 2-Sylow subgroup
    let mut z = Nat::from(2u32);
    while legendre_is_residue(&z, p) {
        z += 1u32;
    }

    let mut m = s;
    let mut t = c.modpow(&q, p);
    let mut cc = z.modpow(&q, p);
    let mut r = c.modpow(&((&q + 1u32) >> 1), p);
    while !t.is_one() {
        let mut i = 0;
        let mut t2 = t.clone();
        while !t2.is_one() {
            t2 = (&t2 * &t2) % p;
            i += 1;
            if i == m {
                return Err(NumError::NonResidue {
                    value: c,
                    modulus: p.clone(),
                });
            }
        }
        let b = cc.modpow(&(Nat::one() << (m - i - 1)), p);
        m = i;
        cc = (&b * &b) % p;
        t = (&t * &cc) % p;
        r = (&r * &b) % p;
    }
    let other = p - &r;
    Ok(r.min(other))
}

/// Unique `x < p*q` with `x = a_p (mod p)` and `x = a_q (mod q)`.
pub fn crt_combine(a_p: &Nat, p: &Nat, a_q: &Nat, q: &Nat) -> Result<Nat, NumError> {
    if p.is_zero() || q.is_zero() {
        return Err(NumError::Domain("moduli must be positive".into()));
    }
    let (pi, qi) = (BigInt::from(p.clone()), BigInt::from(q.clone()));
    let egcd = pi.extended_gcd(&qi);
    if !egcd.gcd.is_one() {
        return Err(NumError::Domain(format!("{p} and {q} are not coprime")));
    }
    let n = &pi * &qi;
    // x = a_p + p * ((a_q - a_p) * p^{-1} mod q)
    let inv_p = egcd.x.mod_floor(&qi);
    let ap = BigInt::from(a_p % p);
    let aq = BigInt::from(a_q % q);
    let lift = ((&aq - &ap) * inv_p).mod_floor(&qi);
    let x = (ap + &pi * lift).mod_floor(&n);
    Ok(x.to_biguint().expect("mod_floor by a positive modulus is non-negative"))
}

/// `n = p*q` for distinct odd primes. The factors stay private; only `n`
/// and its bit length are public.
#[derive(Clone, PartialEq, Eq)]
pub struct RabinModulus {
    p: Nat,
    q: Nat,
    n: Nat,
}

impl RabinModulus {
    pub fn new(p: Nat, q: Nat) -> Result<Self, NumError> {
        if p == q {
            return Err(NumError::Domain("factors must be distinct".into()));
        }
        for f in [&p, &q] {
            if f.is_even() || !is_probable_prime(f, PRIMALITY_ROUNDS) {
                return Err(NumError::Domain(format!("{f} is not an odd prime")));
            }
        }
        let n = &p * &q;
        Ok(Self { p, q, n })
    }

    /// Samples two distinct `prime_bits`-bit odd primes.
    pub fn generate<R: Rng + ?Sized>(prime_bits: u64, rng: &mut R) -> Result<Self, NumError> {
        let p = random_odd_prime(prime_bits, rng)?;
        loop {
            let q = random_odd_prime(prime_bits, rng)?;
            if q != p {
                return Self::new(p, q);
            }
        }
    }

    pub fn n(&self) -> &Nat {
        &self.n
    }

    /// Bit length `|n|`.
    pub fn bits(&self) -> usize {
        self.n.bits() as usize
    }

    pub fn factors(&self) -> (&Nat, &Nat) {
        (&self.p, &self.q)
    }
}

impl fmt::Debug for RabinModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RabinModulus")
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

/// The four square roots of a unit quadratic residue, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootQuad {
    roots: [Nat; 4],
}

impl RootQuad {
    pub fn roots(&self) -> &[Nat; 4] {
        &self.roots
    }

    /// The canonical representative used by deterministic solvers.
    pub fn min(&self) -> &Nat {
        &self.roots[0]
    }

    pub fn contains(&self, x: &Nat) -> bool {
        self.roots.contains(x)
    }
}

pub fn four_roots(c: &Nat, modulus: &RabinModulus) -> Result<RootQuad, NumError> {
    let n = modulus.n();
    let c = c % n;
    let g = gcd(&c, n);
    if !g.is_one() {
        if &g == n {
            return Err(NumError::Domain("0 is not a unit modulo n".into()));
        }
        return Err(NumError::FactorLeak { factor: g });
    }
    let (p, q) = modulus.factors();
    let xp = sqrt_mod_prime(&c, p)?;
    let xq = sqrt_mod_prime(&c, q)?;
    let (neg_xp, neg_xq) = (p - &xp, q - &xq);
    let mut roots = [
        crt_combine(&xp, p, &xq, q)?,
        crt_combine(&xp, p, &neg_xq, q)?,
        crt_combine(&neg_xp, p, &xq, q)?,
        crt_combine(&neg_xp, p, &neg_xq, q)?,
    ];
    roots.sort();
    Ok(RootQuad { roots })
}

/// `gcd(r1 - r2 mod n, n)` when it is a proper factor of `n`.
pub fn factor_from_roots(r1: &Nat, r2: &Nat, n: &Nat) -> Option<Nat> {
    if n.is_zero() {
        return None;
    }
    let diff = (BigInt::from(r1.clone()) - BigInt::from(r2.clone()))
        .mod_floor(&BigInt::from(n.clone()))
        .abs()
        .to_biguint()?;
    let g = gcd(&diff, n);
    (!g.is_one() && &g != n).then_some(g)
}
