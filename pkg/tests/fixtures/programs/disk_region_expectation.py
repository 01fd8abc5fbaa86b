import fractions
# Calculate each part of the expected intersections
I_1 = 1  # Intersection between the two original diameters
I_2 = 25 * 2 * fractions.Fraction(2, 3)  # Intersections between original diameters and added chords
# Number of pairs of added chords
num_pairs_added = (25 * 24) // 2
I_3 = num_pairs_added * fractions.Fraction(17, 36)  # Intersections between pairs of added chords
# Total expected intersections
E_I = I_1 + I_2 + I_3
E_R = 1 + 27 + E_I
print(int(E_R))
