//! Compiles every Rust listing in the book as a doc-test. One module per
//! chapter, so a failure names the chapter it came from.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(expressions, "expressions.md");
chapter!(model_format, "model-format.md");
chapter!(incidence, "incidence.md");
chapter!(block_triangularization, "block-triangularization.md");
chapter!(strategies, "strategies.md");
chapter!(reduction, "reduction.md");
chapter!(report, "report.md");
chapter!(cli, "cli.md");
