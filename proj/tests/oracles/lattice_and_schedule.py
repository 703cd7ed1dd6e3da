# Independent reference values for the lattice masks and the radius schedule.
# Run with numpy and mpmath installed; outputs are frozen in test_geometry.cpp.
import itertools, numpy as np, mpmath as mp
# rho_inf via product and via Euler pentagonal series (independent)
p=1.0
for j in range(61): p*=1-2.0**(-j-1)
q=mp.mpf(1)/2
s=mp.nsum(lambda k: (-1)**int(k)*q**(k*(3*k-1)/2),[-mp.inf,mp.inf])
print("rho_inf", repr(p), s)
def count(res,rho,n=3):
    t=np.linspace(-1,1,res)
    cnt=0
    for c in itertools.product(t,repeat=2*n-1):
        z2=sum(v*v for v in c[:-1]); x=c[-1]
        if z2*z2+x*x<=rho*rho*(1+1e-12): cnt+=1
    return cnt
print("n3 res9 rho1", count(9,1.0))
print("n3 res13 rho1", count(13,1.0), "rho.5", count(13,0.5))
print("n4 res5", count(5,1.0,4), count(5,.5,4))
