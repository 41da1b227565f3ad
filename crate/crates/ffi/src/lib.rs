//! C ABI over `sdgc-core`.
//!
//! Every function returns an [`SdgcStatus`]; results come back through out
//! pointers. Objects are opaque handles released with their `_free`
//! function. After a failure, [`sdgc_last_error`] copies the message for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sdgc_core::channel::mmse_equalize;
use sdgc_core::diffusion::{sd_denoise, GuidanceWeights, NoiseSchedule};
use sdgc_core::encoder::FrameSequence;
use sdgc_core::metrics::psnr;
use sdgc_core::ndnet::{checkpoint, Activation, CheckpointHeader, MlpModel};
use sdgc_core::pipeline::{training::compute_model, DenoiserKind, ModelBundle, System};
use sdgc_core::rng::rng_from_seed;
use sdgc_core::Error;

/// Status codes. Zero is success; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdgcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    NonFinite = 4,
    Divergence = 5,
    Infeasible = 6,
    Config = 7,
    Format = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Denoiser selection for [`sdgc_bundle_run_clip`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdgcDenoiser {
    None = 0,
    MmseOnly = 1,
    Sd = 2,
    Msd = 3,
    Psd = 4,
}

/// Opaque network handle.
pub struct SdgcModel(MlpModel);

/// Opaque trained-bundle handle.
pub struct SdgcBundle(ModelBundle);

/// Scalar outputs of one end-to-end run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SdgcClipResult {
    pub mse: f64,
    pub psnr_db: f64,
    pub t_exe: f64,
    pub h_true: f64,
    pub h_hat: f64,
    pub keyframes: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> SdgcStatus {
    match e {
        Error::ShapeMismatch { .. } => SdgcStatus::ShapeMismatch,
        Error::InvalidArgument(_) => SdgcStatus::InvalidArgument,
        Error::NonFinite { .. } => SdgcStatus::NonFinite,
        Error::Divergence { .. } => SdgcStatus::Divergence,
        Error::Infeasible { .. } => SdgcStatus::Infeasible,
        Error::Config(_) => SdgcStatus::Config,
        Error::Format(_) => SdgcStatus::Format,
        Error::Io(_) => SdgcStatus::Io,
    }
}

fn fail(status: SdgcStatus, msg: impl Into<String>) -> SdgcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

/// Run `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), SdgcStatus>) -> SdgcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdgcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(SdgcStatus::Panic, "internal panic"),
    }
}

fn check(r: sdgc_core::Result<()>) -> Result<(), SdgcStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn lift<T>(r: sdgc_core::Result<T>) -> Result<T, SdgcStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), SdgcStatus> {
    if p.is_null() {
        Err(fail(SdgcStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, SdgcStatus> {
    non_null(p, "path")?;
    CStr::from_ptr(p).to_str().map_err(|_| fail(SdgcStatus::InvalidArgument, "path is not UTF-8"))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], SdgcStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, needed: usize, what: &str) -> Result<&'a mut [T], SdgcStatus> {
    if len < needed {
        return Err(fail(SdgcStatus::BufferTooSmall, format!("{what} holds {len} values, {needed} needed")));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

/// Copy the calling thread's last error message into `buf` (NUL
/// terminated, truncated to fit). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sdgc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Create a network with Glorot-uniform weights. `activation` is 0 relu,
/// 1 tanh, 2 identity, 3 sigmoid and applies to every layer.
///
/// # Safety
/// `widths` must point to `n_widths` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdgc_model_new(
    widths: *const usize,
    n_widths: usize,
    activation: u8,
    seed: u64,
    out: *mut *mut SdgcModel,
) -> SdgcStatus {
    guard(|| {
        non_null(out, "out")?;
        let widths = slice_arg(widths, n_widths, "widths")?;
        let act = Activation::from_code(activation)
            .map_err(|_| fail(SdgcStatus::InvalidArgument, format!("unknown activation code {activation}")))?;
        let model = lift(MlpModel::new(widths, act, seed))?;
        *out = Box::into_raw(Box::new(SdgcModel(model)));
        Ok(())
    })
}

/// Load a network checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdgc_model_load(path: *const c_char, out: *mut *mut SdgcModel) -> SdgcStatus {
    guard(|| {
        non_null(out, "out")?;
        let (model, _) = lift(checkpoint::load(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(SdgcModel(model)));
        Ok(())
    })
}

/// Write a network checkpoint with an empty tag.
///
/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sdgc_model_save(model: *const SdgcModel, path: *const c_char) -> SdgcStatus {
    guard(|| {
        non_null(model, "model")?;
        check(checkpoint::save(path_arg(path)?, &(*model).0, &CheckpointHeader::tagged("")))
    })
}

/// Input and output widths.
///
/// # Safety
/// `model` must come from this library; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdgc_model_dims(model: *const SdgcModel, inputs: *mut usize, outputs: *mut usize) -> SdgcStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(inputs, "inputs")?;
        non_null(outputs, "outputs")?;
        *inputs = (*model).0.input_width();
        *outputs = (*model).0.output_width();
        Ok(())
    })
}

/// Forward `rows` packed input rows into `output` (`rows × outputs`).
///
/// # Safety
/// `input` must hold `rows × inputs` values and `output` `output_len`.
#[no_mangle]
pub unsafe extern "C" fn sdgc_model_forward(
    model: *const SdgcModel,
    input: *const f64,
    rows: usize,
    output: *mut f64,
    output_len: usize,
) -> SdgcStatus {
    guard(|| {
        non_null(model, "model")?;
        let m = &(*model).0;
        let input = slice_arg(input, rows * m.input_width(), "input")?;
        let out = out_slice(output, output_len, rows * m.output_width(), "output")?;
        out.copy_from_slice(&lift(m.forward_rows(input, rows))?);
        Ok(())
    })
}

/// Release a network. Null is ignored.
///
/// # Safety
/// `model` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sdgc_model_free(model: *mut SdgcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Denoise a received latent with a known gain, using `model` as the noise
/// estimator on a linear schedule and noise-matched guidance.
///
/// # Safety
/// `received` and `output` must hold `dim` values.
#[no_mangle]
pub unsafe extern "C" fn sdgc_sd_denoise(
    model: *const SdgcModel,
    received: *const f64,
    dim: usize,
    gain: f64,
    noise_power: f64,
    steps: usize,
    beta_start: f64,
    beta_end: f64,
    seed: u64,
    output: *mut f64,
) -> SdgcStatus {
    guard(|| {
        non_null(model, "model")?;
        let rx = slice_arg(received, dim, "received")?;
        let out = out_slice(output, dim, dim, "output")?;
        let sch = lift(NoiseSchedule::linear(steps, beta_start, beta_end))?;
        let z = lift(sd_denoise(
            rx,
            gain,
            noise_power,
            &(*model).0,
            &sch,
            &GuidanceWeights::noise_matched(),
            &mut rng_from_seed(seed),
        ))?;
        out.copy_from_slice(&z);
        Ok(())
    })
}

/// Elementwise MMSE equalization `ĥ·y / (ĥ² + σ²/p)`.
///
/// # Safety
/// `received` and `output` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn sdgc_mmse_equalize(
    received: *const f64,
    len: usize,
    gain: f64,
    noise_power: f64,
    power: f64,
    output: *mut f64,
) -> SdgcStatus {
    guard(|| {
        let rx = slice_arg(received, len, "received")?;
        let out = out_slice(output, len, len, "output")?;
        out.copy_from_slice(&lift(mmse_equalize(rx, gain, noise_power, power))?);
        Ok(())
    })
}

/// PSNR in dB for an 8-bit MSE; infinite for zero.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdgc_psnr(mse: f64, out: *mut f64) -> SdgcStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(psnr(mse))?;
        Ok(())
    })
}

/// Load a trained bundle directory.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdgc_bundle_load(path: *const c_char, out: *mut *mut SdgcBundle) -> SdgcStatus {
    guard(|| {
        non_null(out, "out")?;
        let b = lift(ModelBundle::load(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(SdgcBundle(b)));
        Ok(())
    })
}

/// Frame geometry the bundle was trained for.
///
/// # Safety
/// `bundle` must come from this library; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdgc_bundle_geometry(
    bundle: *const SdgcBundle,
    frames: *mut usize,
    height: *mut usize,
    width: *mut usize,
) -> SdgcStatus {
    guard(|| {
        non_null(bundle, "bundle")?;
        non_null(frames, "frames")?;
        non_null(height, "height")?;
        non_null(width, "width")?;
        let d = &(*bundle).0.config.data;
        (*frames, *height, *width) = (d.frames, d.height, d.width);
        Ok(())
    })
}

/// Send one RGB clip (`frames × height × width × 3` bytes) through the
/// link and write the reconstruction into `output` (same size).
///
/// # Safety
/// `pixels` must hold the clip, `output` `output_len` bytes and `result`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdgc_bundle_run_clip(
    bundle: *const SdgcBundle,
    pixels: *const u8,
    frames: usize,
    height: usize,
    width: usize,
    denoiser: SdgcDenoiser,
    snr_db: f64,
    t_max: f64,
    seed: u64,
    output: *mut u8,
    output_len: usize,
    result: *mut SdgcClipResult,
) -> SdgcStatus {
    guard(|| {
        non_null(bundle, "bundle")?;
        non_null(result, "result")?;
        let b = &(*bundle).0;
        let n = frames * height * width * 3;
        let px = slice_arg(pixels, n, "pixels")?;
        let out = out_slice(output, output_len, n, "output")?;
        let clip = lift(FrameSequence::new(frames, height, width, px.to_vec()))?;
        let sys = lift(System::from_bundle(b))?;
        let kind = match denoiser {
            SdgcDenoiser::None => DenoiserKind::None,
            SdgcDenoiser::MmseOnly => DenoiserKind::MmseOnly,
            SdgcDenoiser::Sd => DenoiserKind::Sd,
            SdgcDenoiser::Msd => DenoiserKind::Msd,
            SdgcDenoiser::Psd => DenoiserKind::Psd,
        };
        let o = lift(sys.run_clip(&clip, kind, snr_db, t_max, lift(compute_model(b))?, seed))?;
        out.copy_from_slice(o.frames.pixels());
        *result = SdgcClipResult {
            mse: o.report.mse,
            psnr_db: o.report.psnr_db,
            t_exe: o.t_exe,
            h_true: o.h_true,
            h_hat: o.h_hat,
            keyframes: o.plan_indices.len(),
        };
        Ok(())
    })
}

/// Release a bundle. Null is ignored.
///
/// # Safety
/// `bundle` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sdgc_bundle_free(bundle: *mut SdgcBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}
