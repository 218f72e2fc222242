import json, sys
from sympy import *
x,y,z=symbols('x y z')
X=(x,y,z)
def kuhn(o,order):
    v=[list(o)]
    for a in order:
        w=list(v[-1]); w[a]+=1; v.append(w)
    return v
slots=[(0,1,2),(1,0,2),(1,2,0),(2,1,0),(2,0,1),(0,2,1)]
def geom(kind):
    if kind=='cube-mid': return (Rational(1,2),)*3,[kuhn((0,0,0),s) for s in slots]
    if kind=='square-mid': return (0,Rational(1,2),Rational(1,2)),[kuhn((0,0,0),slots[3]),kuhn((0,0,0),slots[2]),kuhn((-1,0,0),slots[0]),kuhn((-1,0,0),slots[5])]
    if kind=='edge-mid':
        P=[(0,0,0),(-1,0,0),(-1,-1,0),(0,-1,0),(0,0,1),(1,0,1),(1,1,1),(0,1,1)]
        T=[(1,5,6,7),(1,5,7,8),(1,2,5,8),(1,2,3,5),(1,3,4,5),(1,4,5,6)]
        return (0,0,Rational(1,2)),[[P[i-1] for i in t] for t in T]
    P=[(0,0,-1),(-1,0,-1),(-1,-1,-1),(0,-1,-1),(1,0,0),(1,1,0),(0,1,0),(-1,0,0),(-1,-1,0),(0,-1,0),(1,0,1),(1,1,1),(0,1,1),(0,0,1),(0,0,0)]
    T=[(1,5,6),(1,6,7),(1,2,7),(7,2,8),(1,2,3),(2,3,8),(3,8,9),(3,9,10),(3,10,4),(3,1,4),(1,4,5),(10,4,5),(5,6,12),(6,7,12),(7,13,12),(12,13,14),(11,12,14),(5,11,12),(7,8,13),(8,13,14),(8,9,14),(9,10,14),(10,11,14),(10,5,11)]
    return (0,0,0),[[P[i-1] for i in t]+[P[14]] for t in T]
def bary(v):
    # solve for lambdas via linear system: x = sum l_i v_i, sum l_i=1
    M=Matrix([[v[j][i] for j in range(4)] for i in range(3)]+[[1]*4])
    return list(M.inv()*Matrix([x,y,z,1]))
def integrate_tet(f,v):
    a,b,c=symbols('a b c')
    sub={X[i]: v[0][i]+a*(v[1][i]-v[0][i])+b*(v[2][i]-v[0][i])+c*(v[3][i]-v[0][i]) for i in range(3)}
    J=abs(Matrix([[v[k][i]-v[0][i] for k in (1,2,3)] for i in range(3)]).det())
    g=expand(f.subs(sub,simultaneous=True))
    return J*integrate(integrate(integrate(g,(c,0,1-a-b)),(b,0,1-a)),(a,0,1))
edges=[(0,1),(0,2),(0,3),(1,2),(1,3),(2,3)]
def nodes(v): return [tuple(v[i]) for i in range(4)]+[tuple(Rational(v[a][d]+v[b][d],2) for d in range(3)) for a,b in edges]
def basis(v):
    L=bary(v)
    return [expand(L[i]*(2*L[i]-1)) for i in range(4)]+[expand(4*L[a]*L[b]) for a,b in edges]
data=json.load(open(sys.argv[1]))
bad=0
cache={}
for rec in data:
    kind=rec['class']
    if kind not in cache:
        node,tets=geom(kind)
        info=[]
        for v in tets:
            B=basis(v); N=nodes(v)
            k=[i for i,p in enumerate(N) if tuple(sympify(c) for c in p)==tuple(sympify(c) for c in node)][0]
            info.append((v,B,N,B[k]))
        cache[kind]=info
    p=sympify(rec['monomial'].replace('^','**'))
    vals=[]
    for v,B,N,phi in cache[kind]:
        I=sum(p.subs(dict(zip(X,q)),simultaneous=True)*b for q,b in zip(N,B))
        e=p-I
        d=sum(diff(e,s)*diff(phi,s) for s in X)
        vals.append(integrate_tet(d,v))
    mine=[Rational(*map(int,s.split('/'))) for s in rec['per_tet']]
    if mine!=vals:
        bad+=1; print('MISMATCH',kind,rec['monomial'],vals,mine)
print('checked',len(data),'mismatches',bad)
