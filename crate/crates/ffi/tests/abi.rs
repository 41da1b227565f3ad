use std::ffi::CString;
use std::ptr;

use sdgc_core::channel::mmse_equalize;
use sdgc_core::ndnet::{Activation, MlpModel};
use sdgc_core::pipeline::{generate_dataset, train, DenoiserKind, PipelineConfig, System, TrainPlan};
use sdgc_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { sdgc_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn new_model(widths: &[usize], act: u8, seed: u64) -> *mut SdgcModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { sdgc_model_new(widths.as_ptr(), widths.len(), act, seed, &mut m) }, SdgcStatus::Ok);
    m
}

#[test]
fn model_forward_matches_core() {
    let m = new_model(&[3, 5, 2], 1, 7);
    let (mut i, mut o) = (0, 0);
    assert_eq!(unsafe { sdgc_model_dims(m, &mut i, &mut o) }, SdgcStatus::Ok);
    assert_eq!((i, o), (3, 2));
    let input = [0.1, -0.4, 0.9, 1.5, 0.0, -2.0];
    let mut out = [0.0; 4];
    assert_eq!(unsafe { sdgc_model_forward(m, input.as_ptr(), 2, out.as_mut_ptr(), out.len()) }, SdgcStatus::Ok);
    let core = MlpModel::new(&[3, 5, 2], Activation::Tanh, 7).unwrap();
    assert_eq!(out.to_vec(), core.forward_rows(&input, 2).unwrap());

    let mut small = [0.0; 3];
    assert_eq!(
        unsafe { sdgc_model_forward(m, input.as_ptr(), 2, small.as_mut_ptr(), small.len()) },
        SdgcStatus::BufferTooSmall
    );
    assert!(last_error().contains("needed"));
    unsafe { sdgc_model_free(m) };
}

#[test]
fn model_save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.sdgc").to_str().unwrap()).unwrap();
    let m = new_model(&[2, 4, 1], 0, 3);
    assert_eq!(unsafe { sdgc_model_save(m, path.as_ptr()) }, SdgcStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { sdgc_model_load(path.as_ptr(), &mut back) }, SdgcStatus::Ok);
    let x = [0.3, -0.8];
    let (mut a, mut b) = ([0.0], [0.0]);
    unsafe {
        sdgc_model_forward(m, x.as_ptr(), 1, a.as_mut_ptr(), 1);
        sdgc_model_forward(back, x.as_ptr(), 1, b.as_mut_ptr(), 1);
    }
    assert_eq!(a[0].to_bits(), b[0].to_bits());
    let missing = CString::new(dir.path().join("nope.sdgc").to_str().unwrap()).unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(unsafe { sdgc_model_load(missing.as_ptr(), &mut none) }, SdgcStatus::Io);
    assert!(none.is_null());
    unsafe {
        sdgc_model_free(m);
        sdgc_model_free(back);
        sdgc_model_free(ptr::null_mut());
    }
}

#[test]
fn argument_errors_map_to_status_codes() {
    let mut m = ptr::null_mut();
    let w = [2usize, 2];
    assert_eq!(unsafe { sdgc_model_new(w.as_ptr(), 2, 9, 0, &mut m) }, SdgcStatus::InvalidArgument);
    assert!(last_error().contains("activation"));
    assert_eq!(unsafe { sdgc_model_new(ptr::null(), 2, 0, 0, &mut m) }, SdgcStatus::NullPointer);
    assert_eq!(unsafe { sdgc_model_new(w.as_ptr(), 2, 0, 0, ptr::null_mut()) }, SdgcStatus::NullPointer);
    let (mut i, mut o) = (0, 0);
    assert_eq!(unsafe { sdgc_model_dims(ptr::null(), &mut i, &mut o) }, SdgcStatus::NullPointer);
    let mut p = 0.0;
    assert_eq!(unsafe { sdgc_psnr(-1.0, &mut p) }, SdgcStatus::InvalidArgument);
    assert_eq!(unsafe { sdgc_psnr(65.025, &mut p) }, SdgcStatus::Ok);
    assert!((p - 30.0).abs() < 1e-12);
}

#[test]
fn equalizer_matches_core() {
    let y = [0.5, -1.2, 2.0];
    let mut out = [0.0; 3];
    assert_eq!(unsafe { sdgc_mmse_equalize(y.as_ptr(), 3, 0.8, 0.1, 1.0, out.as_mut_ptr()) }, SdgcStatus::Ok);
    assert_eq!(out.to_vec(), mmse_equalize(&y, 0.8, 0.1, 1.0).unwrap());
    for (o, v) in out.iter().zip(&y) {
        assert!((o - 0.8 * v / (0.64 + 0.1)).abs() < 1e-12);
    }
}

#[test]
fn sd_denoise_is_seeded() {
    let m = new_model(&[5, 8, 4], 2, 1);
    let y = [0.2, -0.1, 0.7, 0.0];
    let run = |seed: u64| {
        let mut out = [0.0; 4];
        let s = unsafe { sdgc_sd_denoise(m, y.as_ptr(), 4, 1.0, 0.1, 20, 1e-4, 0.1, seed, out.as_mut_ptr()) };
        assert_eq!(s, SdgcStatus::Ok);
        out
    };
    assert_eq!(run(5), run(5));
    let mut out = [0.0; 3];
    assert_eq!(
        unsafe { sdgc_sd_denoise(m, y.as_ptr(), 3, 1.0, 0.1, 20, 1e-4, 0.1, 0, out.as_mut_ptr()) },
        SdgcStatus::ShapeMismatch
    );
    assert_eq!(
        unsafe { sdgc_sd_denoise(m, y.as_ptr(), 4, 1.0, 0.1, 20, 0.5, 0.1, 0, out.as_mut_ptr()) },
        SdgcStatus::InvalidArgument
    );
    unsafe { sdgc_model_free(m) };
}

const TINY: &str = "seed = 2\ndata.clips = 4\ndata.frames = 4\ndata.height = 16\ndata.width = 16\n\
model.latent_dim = 6\nmodel.encoder_hidden = 16\nmodel.decoder_hidden = 16\nkeyframe.k = 2\n\
diffusion.steps = 10\ndiffusion.eps_hidden = 8\ndiffusion.gain_hidden = 8\ninterp.window = 5\n\
interp.base_channels = 4\ninterp.refine_hidden = 8\ntrain.ae_steps = 10\ntrain.eps_steps = 20\n\
train.gain_steps = 20\ntrain.interp_epochs = 1\ntrain.interp_samples = 2\ntrain.finetune_steps = 2\n\
train.eval_clips = 1\ncompute.t_fe = 0.001\ncompute.t_ks = 0.001\ncompute.t_sd = 0.001\n\
compute.t_sr = 0.001\ncompute.t_fi = 0.001\n";

#[test]
fn bundle_run_matches_core() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::parse(TINY).unwrap();
    let mut log = |_: &str| {};
    let bundle = train(cfg.clone(), dir.path(), TrainPlan::default(), &mut log).unwrap();
    let path = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { sdgc_bundle_load(path.as_ptr(), &mut b) }, SdgcStatus::Ok);
    let (mut f, mut h, mut w) = (0, 0, 0);
    assert_eq!(unsafe { sdgc_bundle_geometry(b, &mut f, &mut h, &mut w) }, SdgcStatus::Ok);
    assert_eq!((f, h, w), (4, 16, 16));

    let clip = generate_dataset(&cfg.data, 1, "test", 1).unwrap().remove(0).frames;
    let mut out = vec![0u8; clip.pixels().len()];
    let mut res = SdgcClipResult::default();
    let status = unsafe {
        sdgc_bundle_run_clip(b, clip.pixels().as_ptr(), 4, 16, 16, SdgcDenoiser::Psd, 10.0, 5.0, 9, out.as_mut_ptr(), out.len(), &mut res)
    };
    assert_eq!(status, SdgcStatus::Ok);
    let sys = System::from_bundle(&bundle).unwrap();
    let compute = sdgc_core::pipeline::training::compute_model(&bundle).unwrap();
    let want = sys.run_clip(&clip, DenoiserKind::Psd, 10.0, 5.0, compute, 9).unwrap();
    assert_eq!(out, want.frames.pixels());
    assert_eq!(res.mse, want.report.mse);
    assert_eq!(res.h_hat, want.h_hat);
    assert_eq!(res.keyframes, want.plan_indices.len());

    let status = unsafe {
        sdgc_bundle_run_clip(b, clip.pixels().as_ptr(), 4, 16, 16, SdgcDenoiser::Sd, 10.0, 1e-9, 9, out.as_mut_ptr(), out.len(), &mut res)
    };
    assert_eq!(status, SdgcStatus::Infeasible);
    unsafe { sdgc_bundle_free(b) };
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sdgc.h")).unwrap();
    for name in [
        "sdgc_last_error",
        "sdgc_model_new",
        "sdgc_model_load",
        "sdgc_model_save",
        "sdgc_model_dims",
        "sdgc_model_forward",
        "sdgc_model_free",
        "sdgc_sd_denoise",
        "sdgc_mmse_equalize",
        "sdgc_psnr",
        "sdgc_bundle_load",
        "sdgc_bundle_geometry",
        "sdgc_bundle_run_clip",
        "sdgc_bundle_free",
        "SDGC_STATUS_BUFFER_TOO_SMALL = 10",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    // The header must also be valid C when a compiler is around.
    if let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sdgc.h")).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
