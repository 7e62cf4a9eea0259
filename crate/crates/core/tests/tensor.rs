use proptest::prelude::*;
use tomocume_core::tensor::{hadamard_row, khatri_rao, kronecker, vec_permutation};
use tomocume_core::DenseMatrix;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-3.0f64..3.0, rows * cols)
        .prop_map(move |d| DenseMatrix::new(rows, cols, d).unwrap())
}

fn binary(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(0u8..2, rows * cols).prop_map(move |d| {
        DenseMatrix::new(rows, cols, d.into_iter().map(f64::from).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn kronecker_mixed_product(
        a in matrix(2, 3), b in matrix(3, 2), c in matrix(3, 2), d in matrix(2, 4)
    ) {
        let lhs = kronecker(&a, &b).unwrap().matmul(&kronecker(&c, &d).unwrap()).unwrap();
        let rhs = kronecker(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn khatri_rao_is_columnwise_kronecker(a in matrix(3, 4), b in matrix(2, 4)) {
        let kr = khatri_rao(&a, &b).unwrap();
        prop_assert_eq!((kr.rows(), kr.cols()), (6, 4));
        for j in 0..4 {
            let aj = DenseMatrix::new(3, 1, a.column(j)).unwrap();
            let bj = DenseMatrix::new(2, 1, b.column(j)).unwrap();
            let col = kronecker(&aj, &bj).unwrap();
            for i in 0..6 {
                prop_assert!((kr[(i, j)] - col[(i, 0)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn khatri_rao_rows_are_hadamard_products(a in binary(3, 5)) {
        let aa = khatri_rao(&a, &a).unwrap();
        let aaa = khatri_rao(&aa, &a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(aa.row(i * 3 + j), &hadamard_row(&[a.row(i), a.row(j)]).unwrap()[..]);
                for k in 0..3 {
                    let h = hadamard_row(&[a.row(i), a.row(j), a.row(k)]).unwrap();
                    prop_assert_eq!(aaa.row((i * 3 + j) * 3 + k), &h[..]);
                }
            }
        }
    }

    #[test]
    fn vec_permutation_commutes_with_kronecker_square(a in matrix(3, 2)) {
        let aa = kronecker(&a, &a).unwrap();
        let um = vec_permutation(3).unwrap();
        let ul = vec_permutation(2).unwrap();
        let lhs = um.matmul(&aa).unwrap();
        let rhs = aa.matmul(&ul).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn vec_permutation_transposes(x in matrix(4, 4)) {
        let u = vec_permutation(4).unwrap();
        let moved = u.matvec(x.as_slice()).unwrap();
        let xt = x.transpose();
        prop_assert_eq!(&moved[..], xt.as_slice());
    }
}

#[test]
fn vec_permutation_is_orthogonal_involution() {
    for l in 1..=6 {
        let u = vec_permutation(l).unwrap();
        let id = DenseMatrix::identity(l * l);
        assert_eq!(u.transpose().matmul(&u).unwrap(), id);
        assert_eq!(u.matmul(&u).unwrap(), id);
    }
    assert!(vec_permutation(101).is_err());
}
