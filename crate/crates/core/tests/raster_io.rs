use std::fs;
use std::path::Path;

use gsc_core::raster::{
    compose_rgb, equalize, payload_path, read_channel, read_raster, write_channel, write_ppm,
    write_raster, RasterHeader,
};
use gsc_core::{BandStack, DType, Error, Grid, IntensityChannel, Polarization};
use proptest::prelude::*;

fn hand_written(dir: &Path, values: &[f64]) -> std::path::PathBuf {
    let hdr = dir.join("tiny.hdr");
    fs::write(
        &hdr,
        "# hand written\nwidth: 2\nheight: 2\nbands: 1\ndtype: float64\nbyteorder: little\nlooks: 4\nbands-names: VV\n",
    )
    .unwrap();
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(payload_path(&hdr), bytes).unwrap();
    hdr
}

#[test]
fn reads_hand_written_file() {
    let dir = tempfile::tempdir().unwrap();
    let hdr = hand_written(dir.path(), &[1.0, 2.0, 3.0, 4.0]);
    let ch = read_channel(&hdr, &payload_path(&hdr), 0).unwrap();
    assert_eq!(ch.grid().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(ch.polarization(), Polarization::VV);
    assert_eq!(ch.looks(), 4.0);
    assert!(matches!(
        read_channel(&hdr, &payload_path(&hdr), 1),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn truncated_payload_reports_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let hdr = hand_written(dir.path(), &[1.0, 2.0, 3.0]);
    match read_channel(&hdr, &payload_path(&hdr), 0) {
        Err(Error::SizeMismatch {
            expected, actual, ..
        }) => assert_eq!((expected, actual), (32, 24)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_samples_name_first_offset() {
    let dir = tempfile::tempdir().unwrap();
    let hdr = hand_written(dir.path(), &[1.0, -2.0, f64::NAN, 4.0]);
    assert!(matches!(
        read_channel(&hdr, &payload_path(&hdr), 0),
        Err(Error::InvalidSample { offset: 1, .. })
    ));
    // the multi-band reader keeps sentinels
    let (_, stack) = read_raster(&hdr, &payload_path(&hdr)).unwrap();
    assert!(stack.bands()[0].as_slice()[2].is_nan());
}

#[test]
fn float32_rasters_round_trip_representable_values() {
    let dir = tempfile::tempdir().unwrap();
    let hdr = dir.path().join("f32.hdr");
    let grid = Grid::from_vec(3, 1, vec![0.5, f64::NAN, 1024.25]).unwrap();
    let stack = BandStack::single("mean", grid).unwrap();
    let header = write_raster(&stack, 2.0, DType::Float32, &hdr, &payload_path(&hdr)).unwrap();
    assert_eq!(fs::metadata(payload_path(&hdr)).unwrap().len(), 12);
    let text = fs::read_to_string(&hdr).unwrap();
    assert!(text.contains("byteorder: little\n") && text.contains("NaN"));
    let (read_header, back) = read_raster(&hdr, &payload_path(&hdr)).unwrap();
    assert_eq!(read_header, header);
    let v = back.bands()[0].as_slice();
    assert_eq!((v[0], v[2]), (0.5, 1024.25));
    assert!(v[1].is_nan());
}

#[test]
fn ppm_matches_independent_decoder() {
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (7, 5);
    let plane = |k: u32| {
        Grid::from_fn(w, h, |x, y| {
            ((x as u32 * 37 + y as u32 * 11 + k * 71) % 256) as u8
        })
    };
    let img = compose_rgb(&plane(0), &plane(1), &plane(2)).unwrap();
    let path = dir.path().join("img.ppm");
    write_ppm(&img, &path).unwrap();
    let decoded = image::open(&path).unwrap().to_rgb8();
    assert_eq!(decoded.dimensions(), (w as u32, h as u32));
    for y in 0..h {
        for x in 0..w {
            assert_eq!(decoded.get_pixel(x as u32, y as u32).0, img.pixel(x, y));
        }
    }
}

fn finite_grid() -> impl Strategy<Value = Grid<f64>> {
    (1usize..6, 1usize..6).prop_flat_map(|(w, h)| {
        proptest::collection::vec(0.0f64..1e6, w * h)
            .prop_map(move |v| Grid::from_vec(w, h, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_round_trip_is_bit_exact(grid in finite_grid(), looks in 0.5f64..16.0) {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("c.hdr");
        let ch = IntensityChannel::new(grid, Polarization::HV, looks).unwrap();
        write_channel(&ch, DType::Float64, &hdr, &payload_path(&hdr)).unwrap();
        let back = read_channel(&hdr, &payload_path(&hdr), 0).unwrap();
        prop_assert_eq!(back.grid().map(|v| v.to_bits()), ch.grid().map(|v| v.to_bits()));
        prop_assert_eq!(back.looks(), looks);
        prop_assert_eq!(back.polarization(), Polarization::HV);
    }

    #[test]
    fn header_text_round_trips(w in 1usize..5000, h in 1usize..5000, bands in 1usize..4, looks in 0.1f64..100.0) {
        let header = RasterHeader {
            width: w,
            height: h,
            bands,
            dtype: DType::Float64,
            looks,
            band_names: (0..bands).map(|i| format!("band {i}")).collect(),
        };
        prop_assert_eq!(RasterHeader::parse(&header.render(), Path::new("p")).unwrap(), header);
    }

    #[test]
    fn equalize_ignores_monotone_transforms(grid in finite_grid()) {
        let logged = grid.map(|v| (v + 1.0).ln());
        let cubed = grid.map(|v| -(v * v * v));
        let e = equalize(&grid).unwrap();
        prop_assert_eq!(equalize(&logged).unwrap(), e.clone());
        // a decreasing map reverses the levels up to floor rounding
        let r = equalize(&cubed).unwrap();
        for (a, b) in e.as_slice().iter().zip(r.as_slice()) {
            prop_assert!((*a as i32 + *b as i32 - 255).abs() <= 1);
        }
    }

    #[test]
    fn equalize_orders_levels(grid in finite_grid()) {
        let e = equalize(&grid).unwrap();
        let v = grid.as_slice();
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] < v[j] {
                    prop_assert!(e.as_slice()[i] <= e.as_slice()[j]);
                }
            }
        }
    }
}
