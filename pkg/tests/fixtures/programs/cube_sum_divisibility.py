m = 3**7
max_a = 3**6
freq = [0] * m
for a in range(1, max_a + 1):
    r = pow(a, 3, m)
    freq[r] += 1
C = [0] * m
for r1 in range(m):
    for r2 in range(m):
        s = (r1 + r2) % m
        C[s] += freq[r1] * freq[r2]
total = 0
for s in range(m):
    target = (-s) % m
    total += C[s] * freq[target]
print(total % 1000)
