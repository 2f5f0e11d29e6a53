import unittest

import numpy as np

from cardy_lab.percolation.rng import site_bits, trial_bits, trial_key


class Test_Counter_Based_Colors(unittest.TestCase):

    def setUp(self):
        grid_i, grid_j = np.meshgrid(np.arange(-50, 50), np.arange(-50, 50), indexing="ij")
        self.i, self.j = grid_i.ravel(), grid_j.ravel()

    def test_colors_are_a_function_of_seed_trial_and_site(self):
        key = trial_key(11, 3)
        np.testing.assert_array_equal(site_bits(key, self.i, self.j), site_bits(key, self.i, self.j))

    def test_site_color_does_not_depend_on_the_other_sites(self):
        key = trial_key(11, 3)
        full = site_bits(key, self.i, self.j)
        part = site_bits(key, self.i[100:200], self.j[100:200])
        np.testing.assert_array_equal(full[100:200], part)

    def test_trials_and_seeds_differ(self):
        a = site_bits(trial_key(1, 0), self.i, self.j)
        b = site_bits(trial_key(1, 1), self.i, self.j)
        c = site_bits(trial_key(2, 0), self.i, self.j)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))

    def test_sites_are_open_with_probability_one_half(self):
        bits = trial_bits(5, 0, 10, self.i, self.j)
        self.assertEqual(bits.shape, (10, self.i.size))
        self.assertAlmostEqual(bits.mean(), 0.5, delta=0.01)

    def test_trial_range_rows_match_single_trials(self):
        bits = trial_bits(5, 4, 7, self.i, self.j)
        np.testing.assert_array_equal(bits[1], site_bits(trial_key(5, 5), self.i, self.j))

    def test_empty_trial_range(self):
        self.assertEqual(trial_bits(5, 3, 3, self.i, self.j).shape, (0, self.i.size))

    def test_negative_seed_is_rejected(self):
        with self.assertRaises(ValueError):
            trial_key(-1, 0)


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
