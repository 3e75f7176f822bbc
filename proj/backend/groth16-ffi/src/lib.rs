//! Groth16 proving backend over BN254, exposed through a C ABI.
//!
//! Consumes the toolkit's canonical constraint-system serialization (magic
//! "ZKR1") and 32-byte little-endian field elements. The setup RNG is seeded
//! by the caller: a ceremony stand-in for testing, insecure for production.

use ark_bn254::{Bn254, Fr};
use ark_ff::PrimeField;
use ark_groth16::{Groth16, PreparedVerifyingKey, Proof, ProvingKey, VerifyingKey};
use ark_relations::lc;
use ark_relations::r1cs::{
    ConstraintSynthesizer, ConstraintSystemRef, LinearCombination, SynthesisError, Variable,
};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use ark_snark::SNARK;
use ark_std::rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Mutex, OnceLock};

#[repr(C)]
pub struct ByteBuf {
    ptr: *mut u8,
    len: usize,
    cap: usize,
}

impl ByteBuf {
    fn from_vec(mut v: Vec<u8>) -> ByteBuf {
        let buf = ByteBuf {
            ptr: v.as_mut_ptr(),
            len: v.len(),
            cap: v.capacity(),
        };
        std::mem::forget(v);
        buf
    }
}

/// # Safety
/// `buf` must originate from this library.
#[no_mangle]
pub unsafe extern "C" fn zkg16_buf_free(buf: ByteBuf) {
    if !buf.ptr.is_null() {
        drop(Vec::from_raw_parts(buf.ptr, buf.len, buf.cap));
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }
    fn bytes(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        if end > self.data.len() {
            return None;
        }
        let s = &self.data[self.pos..end];
        self.pos = end;
        Some(s)
    }
    fn u32(&mut self) -> Option<u32> {
        self.bytes(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
    fn u64(&mut self) -> Option<u64> {
        self.bytes(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
    fn fr(&mut self) -> Option<Fr> {
        self.bytes(32).map(Fr::from_le_bytes_mod_order)
    }
}

type TermVec = Vec<(u64, Fr)>;

struct ParsedSystem {
    num_public: u64,
    num_private: u64,
    constraints: Vec<[TermVec; 3]>,
}

fn parse_system(bytes: &[u8]) -> Option<ParsedSystem> {
    let mut r = Reader::new(bytes);
    if r.bytes(4)? != b"ZKR1" {
        return None;
    }
    if r.u32()? != 1 {
        return None;
    }
    let num_public = r.u64()?;
    let num_private = r.u64()?;
    let num_constraints = r.u64()?;
    let mut constraints = Vec::with_capacity(num_constraints as usize);
    for _ in 0..num_constraints {
        let mut lcs: [TermVec; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for slot in lcs.iter_mut() {
            let count = r.u64()?;
            slot.reserve(count as usize);
            for _ in 0..count {
                let idx = r.u64()?;
                let coeff = r.fr()?;
                if idx >= 1 + num_public + num_private {
                    return None;
                }
                slot.push((idx, coeff));
            }
        }
        constraints.push(lcs);
    }
    // Trailing annotation section is provenance only; ignored here.
    Some(ParsedSystem {
        num_public,
        num_private,
        constraints,
    })
}

fn parse_values(bytes: &[u8], expect_public: u64, expect_private: u64) -> Option<(Vec<Fr>, Vec<Fr>)> {
    let mut r = Reader::new(bytes);
    let np = r.u64()?;
    let ns = r.u64()?;
    if np != expect_public || ns != expect_private {
        return None;
    }
    let mut publics = Vec::with_capacity(np as usize);
    for _ in 0..np {
        publics.push(r.fr()?);
    }
    let mut privates = Vec::with_capacity(ns as usize);
    for _ in 0..ns {
        privates.push(r.fr()?);
    }
    Some((publics, privates))
}

struct ZkwmCircuit {
    system: ParsedSystem,
    values: Option<(Vec<Fr>, Vec<Fr>)>,
}

impl ConstraintSynthesizer<Fr> for ZkwmCircuit {
    fn generate_constraints(self, cs: ConstraintSystemRef<Fr>) -> Result<(), SynthesisError> {
        let np = self.system.num_public as usize;
        let ns = self.system.num_private as usize;
        let mut vars: Vec<Variable> = Vec::with_capacity(1 + np + ns);
        vars.push(Variable::One);
        for i in 0..np {
            let value = self.values.as_ref().map(|(p, _)| p[i]);
            vars.push(cs.new_input_variable(|| value.ok_or(SynthesisError::AssignmentMissing))?);
        }
        for i in 0..ns {
            let value = self.values.as_ref().map(|(_, w)| w[i]);
            vars.push(cs.new_witness_variable(|| value.ok_or(SynthesisError::AssignmentMissing))?);
        }
        let build = |terms: &TermVec| -> LinearCombination<Fr> {
            let mut acc = lc!();
            for (idx, coeff) in terms {
                acc = acc + (*coeff, vars[*idx as usize]);
            }
            acc
        };
        for lcs in &self.system.constraints {
            cs.enforce_constraint(build(&lcs[0]), build(&lcs[1]), build(&lcs[2]))?;
        }
        Ok(())
    }
}

fn slice<'a>(ptr: *const u8, len: usize) -> &'a [u8] {
    if ptr.is_null() {
        &[]
    } else {
        unsafe { std::slice::from_raw_parts(ptr, len) }
    }
}

fn serialize<T: CanonicalSerialize>(value: &T) -> Option<Vec<u8>> {
    let mut out = Vec::new();
    value.serialize_compressed(&mut out).ok()?;
    Some(out)
}

/// Seeded circuit-specific setup. Returns 0 on success.
///
/// # Safety
/// Pointers must reference buffers of the stated lengths; out-params must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn zkg16_setup(
    cs_ptr: *const u8,
    cs_len: usize,
    seed: u64,
    pk_out: *mut ByteBuf,
    vk_out: *mut ByteBuf,
) -> i32 {
    let result = catch_unwind(AssertUnwindSafe(|| {
        let system = parse_system(slice(cs_ptr, cs_len))?;
        let circuit = ZkwmCircuit {
            system,
            values: None,
        };
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (pk, vk) = Groth16::<Bn254>::circuit_specific_setup(circuit, &mut rng).ok()?;
        Some((serialize(&pk)?, serialize(&vk)?))
    }));
    match result {
        Ok(Some((pk, vk))) => {
            *pk_out = ByteBuf::from_vec(pk);
            *vk_out = ByteBuf::from_vec(vk);
            0
        }
        Ok(None) => -1,
        Err(_) => -2,
    }
}

/// # Safety
/// Pointers must reference buffers of the stated lengths; out-param valid.
#[no_mangle]
pub unsafe extern "C" fn zkg16_prove(
    pk_ptr: *const u8,
    pk_len: usize,
    cs_ptr: *const u8,
    cs_len: usize,
    values_ptr: *const u8,
    values_len: usize,
    seed: u64,
    proof_out: *mut ByteBuf,
) -> i32 {
    let result = catch_unwind(AssertUnwindSafe(|| {
        let system = parse_system(slice(cs_ptr, cs_len))?;
        let values = parse_values(slice(values_ptr, values_len), system.num_public, system.num_private)?;
        let pk = ProvingKey::<Bn254>::deserialize_compressed(slice(pk_ptr, pk_len)).ok()?;
        let circuit = ZkwmCircuit {
            system,
            values: Some(values),
        };
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x70726f6f66);
        let proof = Groth16::<Bn254>::prove(&pk, circuit, &mut rng).ok()?;
        serialize(&proof)
    }));
    match result {
        Ok(Some(proof)) => {
            *proof_out = ByteBuf::from_vec(proof);
            0
        }
        Ok(None) => -1,
        Err(_) => -2,
    }
}

/// Returns 1 accept, 0 reject, negative on malformed inputs.
///
/// # Safety
/// Pointers must reference buffers of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn zkg16_verify(
    vk_ptr: *const u8,
    vk_len: usize,
    proof_ptr: *const u8,
    proof_len: usize,
    publics_ptr: *const u8,
    publics_len: usize,
) -> i32 {
    let result = catch_unwind(AssertUnwindSafe(|| {
        // Deserializing a verifying key re-validates every encoded point
        // (decompression + subgroup checks), which dwarfs the actual pairing
        // check. Verifiers hold their key loaded; cache the prepared form
        // keyed by the raw key bytes.
        static PVK_CACHE: OnceLock<Mutex<HashMap<Vec<u8>, PreparedVerifyingKey<Bn254>>>> =
            OnceLock::new();
        let vk_bytes = slice(vk_ptr, vk_len);
        let cache = PVK_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let pvk = {
            let mut guard = cache.lock().ok()?;
            match guard.get(vk_bytes) {
                Some(p) => p.clone(),
                None => {
                    let vk =
                        VerifyingKey::<Bn254>::deserialize_compressed(vk_bytes).ok()?;
                    let pvk = PreparedVerifyingKey::from(vk);
                    guard.insert(vk_bytes.to_vec(), pvk.clone());
                    pvk
                }
            }
        };
        let proof = Proof::<Bn254>::deserialize_compressed(slice(proof_ptr, proof_len)).ok()?;
        if publics_len % 32 != 0 {
            return None;
        }
        let publics: Vec<Fr> = slice(publics_ptr, publics_len)
            .chunks_exact(32)
            .map(Fr::from_le_bytes_mod_order)
            .collect();
        Groth16::<Bn254>::verify_with_processed_vk(&pvk, &publics, &proof).ok()
    }));
    match result {
        Ok(Some(true)) => 1,
        Ok(Some(false)) => 0,
        Ok(None) => -1,
        Err(_) => -2,
    }
}
