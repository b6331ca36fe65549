fn main() {
    // Dense symmetric/general eigensolves and small complex solves go through
    // the system LAPACK. OpenBLAS ships the full LAPACK symbol set on every
    // mainstream distribution; see README for the required package.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
